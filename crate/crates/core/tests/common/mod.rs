//! Helpers shared by the integration tests: fixtures, synthetic data and
//! brute-force oracles written without the crate's measure code.

#![allow(dead_code)]

use std::path::PathBuf;

use prf::dataset::{load_csv, Column, Dataset, FeatureKind, Schema, Target, Value};
use prf::tree::{DecisionTree, SplitKind, SplitRule, StopReason, TreeNode};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const TIE_EPS: f64 = 1e-12;

pub fn data_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/data")
}

pub fn tennis() -> Dataset {
    let schema = Schema::load(data_dir().join("play_tennis.schema.json")).unwrap();
    load_csv(data_dir().join("play_tennis.csv"), &schema).unwrap()
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// A classification table with `n_cat` categorical features (2 to 4
/// values each) then `n_cont` continuous features with few distinct values,
/// so ties and repeated thresholds are common. The label follows the first
/// feature, flipped with probability `noise`.
pub fn random_classification(seed: u64, rows: usize, n_cat: usize, n_cont: usize, n_classes: usize, noise: f64) -> Dataset {
    let mut r = rng(seed);
    let mut features = Vec::new();
    let mut columns = Vec::new();
    for j in 0..n_cat {
        let card = r.gen_range(2..=4u32);
        features.push(serde_json::json!({
            "name": format!("c{j}"),
            "kind": "categorical",
            "values": (0..card).map(|v| format!("v{v}")).collect::<Vec<_>>(),
        }));
        columns.push(Column::Categorical((0..rows).map(|_| r.gen_range(0..card)).collect()));
    }
    for j in 0..n_cont {
        features.push(serde_json::json!({ "name": format!("x{j}"), "kind": "continuous" }));
        columns.push(Column::Continuous(
            (0..rows).map(|_| f64::from(r.gen_range(0..8u32)) * 0.5).collect(),
        ));
    }
    let classes: Vec<String> = (0..n_classes).map(|c| format!("k{c}")).collect();
    let schema = Schema::from_json(
        &serde_json::json!({
            "features": features,
            "target": { "name": "y", "kind": "categorical", "classes": classes },
        })
        .to_string(),
    )
    .unwrap();
    let labels = (0..rows)
        .map(|i| {
            let base = match &columns.first() {
                Some(Column::Categorical(c)) => c[i] as usize,
                Some(Column::Continuous(x)) => (x[i] * 2.0) as usize,
                None => 0,
            };
            if r.gen_bool(noise) {
                r.gen_range(0..n_classes as u32)
            } else {
                (base % n_classes) as u32
            }
        })
        .collect();
    Dataset::from_columns(schema, columns, Target::Classes(labels)).unwrap()
}

/// Two-class table with `informative` noisy-copy features and the rest pure
/// noise. Each informative feature agrees with the label with probability
/// `agree`.
pub fn noisy_binary(seed: u64, rows: usize, informative: usize, noise_features: usize, agree: f64) -> Dataset {
    let mut r = rng(seed);
    let labels: Vec<u32> = (0..rows).map(|_| r.gen_range(0..2)).collect();
    let mut features = Vec::new();
    let mut columns = Vec::new();
    for j in 0..informative + noise_features {
        features.push(serde_json::json!({ "name": format!("f{j}"), "kind": "categorical", "values": ["a", "b"] }));
        let col = (0..rows)
            .map(|i| {
                if j < informative {
                    if r.gen_bool(agree) {
                        labels[i]
                    } else {
                        1 - labels[i]
                    }
                } else {
                    r.gen_range(0..2)
                }
            })
            .collect();
        columns.push(Column::Categorical(col));
    }
    let schema = Schema::from_json(
        &serde_json::json!({
            "features": features,
            "target": { "name": "y", "kind": "categorical", "classes": ["n", "p"] },
        })
        .to_string(),
    )
    .unwrap();
    Dataset::from_columns(schema, columns, Target::Classes(labels)).unwrap()
}

// ---------------------------------------------------------------------------
// Brute-force measures over raw label lists.

pub fn bf_entropy(labels: &[u32]) -> f64 {
    let n = labels.len() as f64;
    let mut counts = std::collections::BTreeMap::new();
    for &l in labels {
        *counts.entry(l).or_insert(0u64) += 1;
    }
    counts
        .values()
        .map(|&c| {
            let p = c as f64 / n;
            -p * p.log2()
        })
        .sum()
}

/// Gain, split info and gain ratio of partitioning `labels` into `groups`.
pub fn bf_gain_ratio(labels: &[u32], groups: &[Vec<u32>]) -> (f64, f64, f64) {
    let n = labels.len() as f64;
    let h = bf_entropy(labels);
    let mut cond = 0.0;
    let mut si = 0.0;
    for g in groups.iter().filter(|g| !g.is_empty()) {
        let w = g.len() as f64 / n;
        cond += w * bf_entropy(g);
        si -= w * w.log2();
    }
    let gain = h - cond;
    let gr = if si > 0.0 { gain / si } else { 0.0 };
    (gain, si, gr)
}

fn class_labels(d: &Dataset, rows: &[usize]) -> Vec<u32> {
    match d.target() {
        Target::Classes(c) => rows.iter().map(|&r| c[r]).collect(),
        Target::Values(_) => panic!("classification only"),
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Candidate {
    Multiway { feature: usize, values: Vec<u32> },
    Threshold { feature: usize, cut: f64 },
}

/// Every admissible split of `rows` on `feature` with its gain ratio.
pub fn bf_candidates(d: &Dataset, feature: usize, rows: &[usize], min_leaf: usize) -> Vec<(Candidate, f64)> {
    let labels = class_labels(d, rows);
    match d.column(feature) {
        Column::Categorical(codes) => {
            let mut values: Vec<u32> = rows.iter().map(|&r| codes[r]).collect();
            values.sort_unstable();
            values.dedup();
            if values.len() < 2 {
                return vec![];
            }
            let groups: Vec<Vec<u32>> = values
                .iter()
                .map(|&v| {
                    rows.iter()
                        .zip(&labels)
                        .filter(|(&r, _)| codes[r] == v)
                        .map(|(_, &l)| l)
                        .collect()
                })
                .collect();
            if groups.iter().any(|g| g.len() < min_leaf) {
                return vec![];
            }
            let (_, _, gr) = bf_gain_ratio(&labels, &groups);
            vec![(Candidate::Multiway { feature, values }, gr)]
        }
        Column::Continuous(xs) => {
            let mut distinct: Vec<f64> = rows.iter().map(|&r| xs[r]).collect();
            distinct.sort_by(f64::total_cmp);
            distinct.dedup();
            distinct
                .windows(2)
                .filter_map(|w| {
                    let cut = (w[0] + w[1]) / 2.0;
                    let (mut lo, mut hi) = (Vec::new(), Vec::new());
                    for (&r, &l) in rows.iter().zip(&labels) {
                        if xs[r] > cut {
                            hi.push(l)
                        } else {
                            lo.push(l)
                        }
                    }
                    if lo.len() < min_leaf || hi.len() < min_leaf {
                        return None;
                    }
                    let (_, _, gr) = bf_gain_ratio(&labels, &[lo, hi]);
                    Some((Candidate::Threshold { feature, cut }, gr))
                })
                .collect()
        }
    }
}

/// The split a correct builder must choose: highest gain ratio above zero,
/// earlier feature then smaller threshold among near-ties.
pub fn bf_best(d: &Dataset, usable: &[usize], rows: &[usize], min_leaf: usize) -> Option<(Candidate, f64)> {
    let mut best: Option<(Candidate, f64)> = None;
    for &f in usable {
        for (c, gr) in bf_candidates(d, f, rows, min_leaf) {
            if gr <= TIE_EPS {
                continue;
            }
            match &best {
                Some((_, b)) if gr <= b + TIE_EPS => {}
                _ => best = Some((c, gr)),
            }
        }
    }
    best
}

fn same_rule(rule: &SplitRule, c: &Candidate) -> bool {
    match (&rule.kind, c) {
        (SplitKind::Multiway { values }, Candidate::Multiway { feature, values: v }) => {
            rule.feature_index == *feature && values == v
        }
        (SplitKind::Threshold { cut }, Candidate::Threshold { feature, cut: c }) => {
            rule.feature_index == *feature && (cut - c).abs() < 1e-9
        }
        _ => false,
    }
}

fn branch_of(d: &Dataset, rule: &SplitRule, row: usize) -> usize {
    match (&rule.kind, d.column(rule.feature_index)) {
        (SplitKind::Multiway { values }, Column::Categorical(codes)) => {
            values.iter().position(|&v| v == codes[row]).unwrap()
        }
        (SplitKind::Threshold { cut }, Column::Continuous(xs)) => usize::from(xs[row] > *cut),
        _ => panic!("rule kind does not match column"),
    }
}

/// Walks `tree` with its bootstrap `rows` and checks every node against the
/// brute-force argmax. Returns the number of nodes checked.
pub fn check_tree(d: &Dataset, tree: &DecisionTree, rows: &[usize], max_depth: usize, min_leaf: usize) -> Result<usize, String> {
    let mut usable = tree.selected_features.clone();
    usable.sort_unstable();
    check_node(d, &tree.root, rows, &usable, 0, max_depth, min_leaf)
}

fn check_node(
    d: &Dataset,
    node: &TreeNode,
    rows: &[usize],
    usable: &[usize],
    depth: usize,
    max_depth: usize,
    min_leaf: usize,
) -> Result<usize, String> {
    if node.rows() != rows.len() as u64 {
        return Err(format!("node at depth {depth} holds {} rows, routing gives {}", node.rows(), rows.len()));
    }
    let labels = class_labels(d, rows);
    let pure = labels.iter().all(|&l| l == labels[0]);
    match node {
        TreeNode::Leaf { stop, .. } => {
            let ok = match stop {
                StopReason::Pure => pure,
                StopReason::MaxDepth => depth >= max_depth,
                StopReason::NoFeatures => usable.is_empty(),
                StopReason::MinSamples => rows.len() < 2,
                StopReason::NoGain => bf_best(d, usable, rows, min_leaf).is_none(),
            };
            if ok {
                Ok(1)
            } else {
                Err(format!("leaf at depth {depth} stopped with {stop:?} wrongly"))
            }
        }
        TreeNode::Internal { rule, children, .. } => {
            if pure || depth >= max_depth {
                return Err(format!("node at depth {depth} split but should have stopped"));
            }
            let Some((best, gr)) = bf_best(d, usable, rows, min_leaf) else {
                return Err(format!("node at depth {depth} split without positive gain"));
            };
            if !same_rule(rule, &best) {
                return Err(format!("depth {depth}: chose {rule:?}, oracle {best:?} (GR {gr})"));
            }
            let mut parts = vec![Vec::new(); children.len()];
            for &r in rows {
                parts[branch_of(d, rule, r)].push(r);
            }
            let child_usable: Vec<usize> = if rule.consumes_feature() {
                usable.iter().copied().filter(|&f| f != rule.feature_index).collect()
            } else {
                usable.to_vec()
            };
            let mut n = 1;
            for (child, part) in children.iter().zip(&parts) {
                n += check_node(d, child, part, &child_usable, depth + 1, max_depth, min_leaf)?;
            }
            Ok(n)
        }
    }
}

// ---------------------------------------------------------------------------
// Independent DAG expectations, computed from the tree itself.

#[derive(Debug, Default, PartialEq, Eq)]
pub struct DagExpectation {
    pub stage1_gr: usize,
    pub gr_total: usize,
    pub ns_total: usize,
    pub stages: usize,
    pub internal: usize,
}

/// Scored nodes are the root, internal nodes and leaves closed for lack of
/// gain; each yields one T_GR per usable feature and one T_NS.
pub fn expected_dag(tree: &DecisionTree) -> DagExpectation {
    let mut usable = tree.selected_features.clone();
    usable.sort_unstable();
    let mut e = DagExpectation {
        stage1_gr: usable.len(),
        ..Default::default()
    };
    walk(&tree.root, 0, &usable, &mut e);
    e
}

fn walk(node: &TreeNode, depth: usize, usable: &[usize], e: &mut DagExpectation) {
    let scored = match node {
        TreeNode::Internal { .. } => true,
        TreeNode::Leaf { stop, .. } => depth == 0 || *stop == StopReason::NoGain,
    };
    if scored {
        e.gr_total += usable.len();
        e.ns_total += 1;
        e.stages = e.stages.max(depth + 1);
    }
    if let TreeNode::Internal { rule, children, .. } = node {
        e.internal += 1;
        let next: Vec<usize> = if rule.consumes_feature() {
            usable.iter().copied().filter(|&f| f != rule.feature_index).collect()
        } else {
            usable.to_vec()
        };
        for c in children {
            walk(c, depth + 1, &next, e);
        }
    }
}

/// Scored leaves other than the root.
pub fn scored_leaves(tree: &DecisionTree) -> usize {
    fn go(node: &TreeNode, depth: usize) -> usize {
        match node {
            TreeNode::Leaf { stop, .. } => usize::from(depth > 0 && *stop == StopReason::NoGain),
            TreeNode::Internal { children, .. } => children.iter().map(|c| go(c, depth + 1)).sum(),
        }
    }
    go(&tree.root, 0)
}

pub fn value_of(d: &Dataset, row: usize, feature: usize) -> Value {
    d.column(feature).get(row)
}

pub fn is_categorical(d: &Dataset, feature: usize) -> bool {
    d.schema().feature_kind(feature) == FeatureKind::Categorical
}
