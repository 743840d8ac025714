//! Recursive tree induction over one bootstrap sample.

use rand::Rng;

use super::measure::{self, evaluate, partition_rows, GainRatioResult, TIE_EPS};
use super::select::dimension_reduce;
use super::{DecisionTree, Hyperparams, LeafValue, StopReason, TreeNode};
use crate::dataset::{FeatureSubset, Target};
use crate::error::{Error, Result};

/// Below this many row-feature evaluations a node is scored sequentially.
#[cfg(feature = "parallel")]
const PARALLEL_WORK: usize = 1 << 14;

/// Scores `features` over `rows`, in the order given. Features are
/// independent, so with the `parallel` feature large nodes are scored
/// concurrently; the result order never depends on scheduling.
pub fn evaluate_features(
    subsets: &[FeatureSubset],
    features: &[usize],
    rows: &[usize],
    min_leaf: usize,
) -> Result<Vec<GainRatioResult>> {
    #[cfg(feature = "parallel")]
    if rows.len() * features.len() >= PARALLEL_WORK {
        use rayon::prelude::*;
        return features
            .par_iter()
            .map(|&j| evaluate(&subsets[j], rows, min_leaf))
            .collect();
    }
    features
        .iter()
        .map(|&j| evaluate(&subsets[j], rows, min_leaf))
        .collect()
}

/// Index of the best result: highest score above zero, lowest feature index
/// among scores within [`TIE_EPS`]. `results` must be in ascending feature
/// order.
pub fn best_split(results: &[GainRatioResult], regression: bool) -> Option<usize> {
    let mut best: Option<(usize, f64)> = None;
    for (pos, r) in results.iter().enumerate() {
        if r.best_partition.is_none() {
            continue;
        }
        let score = r.score(regression);
        if score <= TIE_EPS {
            continue;
        }
        match best {
            Some((_, s)) if score <= s + TIE_EPS => {}
            _ => best = Some((pos, score)),
        }
    }
    best.map(|(pos, _)| pos)
}

struct Builder<'a> {
    subsets: &'a [FeatureSubset],
    target: &'a Target,
    h: &'a Hyperparams,
    n_classes: usize,
    regression: bool,
}

impl Builder<'_> {
    fn leaf(&self, rows: &[usize], stop: StopReason) -> TreeNode {
        let value = match self.target {
            Target::Classes(codes) => LeafValue::Classes {
                distribution: measure::distribution(codes, rows, self.n_classes),
            },
            Target::Values(ys) => LeafValue::Mean {
                value: rows.iter().map(|&r| ys[r]).sum::<f64>() / rows.len() as f64,
            },
        };
        TreeNode::Leaf {
            value,
            rows: rows.len() as u64,
            stop,
        }
    }

    fn is_pure(&self, rows: &[usize]) -> bool {
        match self.target {
            Target::Classes(codes) => rows.iter().all(|&r| codes[r] == codes[rows[0]]),
            Target::Values(ys) => rows.iter().all(|&r| ys[r] == ys[rows[0]]),
        }
    }

    fn build(
        &self,
        rows: &[usize],
        depth: usize,
        usable: &[usize],
        precomputed: Option<Vec<GainRatioResult>>,
    ) -> Result<TreeNode> {
        if self.is_pure(rows) {
            return Ok(self.leaf(rows, StopReason::Pure));
        }
        if rows.len() < self.h.min_samples_split {
            return Ok(self.leaf(rows, StopReason::MinSamples));
        }
        if depth >= self.h.max_depth {
            return Ok(self.leaf(rows, StopReason::MaxDepth));
        }
        if usable.is_empty() {
            return Ok(self.leaf(rows, StopReason::NoFeatures));
        }
        let results = match precomputed {
            Some(r) => r,
            None => evaluate_features(self.subsets, usable, rows, self.h.min_leaf_size)?,
        };
        let Some(pos) = best_split(&results, self.regression) else {
            return Ok(self.leaf(rows, StopReason::NoGain));
        };
        let rule = results[pos].best_partition.clone().expect("best split has a rule");
        let feature = rule.feature_index;
        let parts = partition_rows(&self.subsets[feature], rows, &rule)?;
        let child_usable: Vec<usize> = if rule.consumes_feature() {
            usable.iter().copied().filter(|&j| j != feature).collect()
        } else {
            usable.to_vec()
        };
        let mut majority_child = 0;
        for (b, p) in parts.iter().enumerate() {
            if p.len() > parts[majority_child].len() {
                majority_child = b;
            }
        }
        let children = parts
            .iter()
            .map(|p| self.build(p, depth + 1, &child_usable, None))
            .collect::<Result<Vec<_>>>()?;
        Ok(TreeNode::Internal {
            rule,
            children,
            majority_child,
            rows: rows.len() as u64,
        })
    }
}

/// Grows one tree on the bootstrap sample `dsi_row` (row indexes, repeats
/// allowed). Feature selection runs once at the root over the whole sample;
/// each node then splits on the selected, still-usable feature with the
/// best score. `subsets` must be the full vertical partition in feature
/// order.
pub fn train_tree<R: Rng + ?Sized>(
    dsi_row: &[usize],
    subsets: &[FeatureSubset],
    h: &Hyperparams,
    rng: &mut R,
    tree_index: usize,
) -> Result<DecisionTree> {
    if dsi_row.is_empty() {
        return Err(Error::InvalidArgument("empty bootstrap sample".into()));
    }
    if subsets.is_empty() {
        return Err(Error::InvalidArgument("no feature subsets".into()));
    }
    if subsets.iter().enumerate().any(|(j, fs)| fs.feature_index() != j) {
        return Err(Error::InvalidArgument("subsets must be in feature order".into()));
    }
    h.validate()?;
    let target = subsets[0].target();
    let n_classes = match target {
        Target::Classes(codes) => codes.iter().copied().max().map_or(0, |c| c as usize + 1),
        Target::Values(_) => 0,
    };

    let all: Vec<usize> = (0..subsets.len()).collect();
    let root_results = evaluate_features(subsets, &all, dsi_row, 1)?;
    let selected = dimension_reduce(&root_results, h, rng)?;
    let importance = measure::variable_importance(&root_results);

    let mut usable = selected.clone();
    usable.sort_unstable();
    let precomputed = (h.min_leaf_size == 1)
        .then(|| usable.iter().map(|&j| root_results[j].clone()).collect());

    let builder = Builder {
        subsets,
        target,
        h,
        n_classes,
        regression: matches!(target, Target::Values(_)),
    };
    let root = builder.build(dsi_row, 0, &usable, precomputed)?;
    Ok(DecisionTree {
        tree_index,
        selected_features: selected,
        importance,
        oob_accuracy: 0.0,
        oob_size: 0,
        root,
    })
}

#[cfg(test)]
mod tests {
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    use super::*;
    use crate::dataset::{read_csv, vertical_partition, Schema};
    use crate::tree::{Prediction, SplitKind};

    const TENNIS: &str = include_str!("../../tests/data/play_tennis.csv");
    const TENNIS_SCHEMA: &str = include_str!("../../tests/data/play_tennis.schema.json");

    fn tennis() -> Vec<FeatureSubset> {
        let schema = Schema::from_json(TENNIS_SCHEMA).unwrap();
        let d = read_csv(TENNIS.as_bytes(), &schema).unwrap();
        vertical_partition(&d).unwrap()
    }

    fn all_features(n: usize) -> Hyperparams {
        Hyperparams {
            m_selected: Some(n),
            k_top: Some(n),
            ..Hyperparams::default()
        }
    }

    #[test]
    fn pure_sample_is_a_leaf() {
        let subsets = tennis();
        // rows 2, 3, 4 are all "yes"
        let t = train_tree(&[2, 3, 4, 4], &subsets, &all_features(4), &mut ChaCha8Rng::seed_from_u64(0), 0)
            .unwrap();
        assert!(t.root.is_leaf());
        assert_eq!(t.predict(&[crate::dataset::Value::Category(0); 4]), Prediction::Class(1));
    }

    #[test]
    fn root_splits_on_outlook() {
        let subsets = tennis();
        let rows: Vec<usize> = (0..14).collect();
        let t = train_tree(&rows, &subsets, &all_features(4), &mut ChaCha8Rng::seed_from_u64(0), 0)
            .unwrap();
        match &t.root {
            TreeNode::Internal { rule, children, .. } => {
                assert_eq!(rule.feature_index, 0);
                assert_eq!(rule.kind, SplitKind::Multiway { values: vec![0, 1, 2] });
                assert_eq!(children.len(), 3);
            }
            leaf => panic!("expected a split, got {leaf:?}"),
        }
        // the classic tree memorizes the 14 rows
        let schema = Schema::from_json(TENNIS_SCHEMA).unwrap();
        let d = read_csv(TENNIS.as_bytes(), &schema).unwrap();
        for i in 0..14 {
            assert_eq!(t.predict(&d.sample(i)), Prediction::Class(d.target().get(i).as_category().unwrap()));
        }
    }

    #[test]
    fn depth_cap_one() {
        let subsets = tennis();
        let rows: Vec<usize> = (0..14).collect();
        let h = Hyperparams {
            max_depth: 1,
            ..all_features(4)
        };
        let t = train_tree(&rows, &subsets, &h, &mut ChaCha8Rng::seed_from_u64(0), 0).unwrap();
        match &t.root {
            TreeNode::Internal { children, .. } => assert!(children.iter().all(TreeNode::is_leaf)),
            leaf => panic!("expected a split, got {leaf:?}"),
        }
        assert_eq!(t.depth(), 1);
    }

    #[test]
    fn deterministic_for_seed() {
        let subsets = tennis();
        let rows = vec![0, 1, 1, 3, 5, 6, 7, 7, 9, 10, 11, 12, 13, 2];
        let h = Hyperparams {
            m_selected: Some(3),
            k_top: Some(1),
            ..Hyperparams::default()
        };
        let a = train_tree(&rows, &subsets, &h, &mut ChaCha8Rng::seed_from_u64(3), 4).unwrap();
        let b = train_tree(&rows, &subsets, &h, &mut ChaCha8Rng::seed_from_u64(3), 4).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.selected_features.len(), 3);
        assert_eq!(a.selected_features[0], 0);
        let vi: f64 = a.importance.iter().sum();
        assert!((vi - 1.0).abs() < 1e-12);
    }

    #[test]
    fn consumed_categorical_not_reused() {
        fn check(node: &TreeNode, used: &mut Vec<usize>) {
            if let TreeNode::Internal { rule, children, .. } = node {
                if rule.consumes_feature() {
                    assert!(!used.contains(&rule.feature_index));
                    used.push(rule.feature_index);
                }
                for c in children {
                    check(c, used);
                }
                if rule.consumes_feature() {
                    used.pop();
                }
            }
        }
        let subsets = tennis();
        let rows: Vec<usize> = (0..14).chain(0..7).collect();
        let t = train_tree(&rows, &subsets, &all_features(4), &mut ChaCha8Rng::seed_from_u64(1), 0)
            .unwrap();
        check(&t.root, &mut Vec::new());
    }

    #[test]
    fn best_split_ties_and_floor() {
        let mk = |j: usize, gr: f64| GainRatioResult {
            feature_index: j,
            entropy_target: 1.0,
            entropy_feature: 1.0 - gr,
            split_info: 1.0,
            info_gain: gr,
            gain_ratio: gr,
            best_partition: Some(crate::tree::SplitRule::multiway(j, vec![0, 1])),
        };
        assert_eq!(best_split(&[mk(0, 0.2), mk(1, 0.2), mk(2, 0.1)], false), Some(0));
        assert_eq!(best_split(&[mk(0, 0.2), mk(1, 0.3)], false), Some(1));
        assert_eq!(best_split(&[mk(0, 0.0), mk(1, 0.0)], false), None);
    }

    #[test]
    fn regression_leaf_means() {
        use crate::dataset::Column;
        use std::sync::Arc;
        let target = Arc::new(Target::Values(vec![1.0, 1.0, 5.0, 5.0]));
        let subsets = vec![FeatureSubset::new(0, Column::Continuous(vec![0.0, 1.0, 2.0, 3.0]), target).unwrap()];
        let t = train_tree(&[0, 1, 2, 3], &subsets, &all_features(1), &mut ChaCha8Rng::seed_from_u64(0), 0)
            .unwrap();
        use crate::dataset::Value::Number;
        assert_eq!(t.predict(&[Number(0.5)]), Prediction::Value(1.0));
        assert_eq!(t.predict(&[Number(2.5)]), Prediction::Value(5.0));
    }

    #[test]
    fn rejects_empty_sample() {
        let subsets = tennis();
        assert!(train_tree(&[], &subsets, &all_features(4), &mut ChaCha8Rng::seed_from_u64(0), 0).is_err());
    }
}
