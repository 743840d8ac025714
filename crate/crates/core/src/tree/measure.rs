//! Entropy, split information, information gain and gain ratio.
//!
//! All logarithms are base 2. Row sets are multisets of row indexes (a
//! bootstrap sample draws rows repeatedly), so every proportion counts
//! repeats.
//!
//! For a regression target the same quantities are computed with the
//! population variance in place of entropy, which makes `info_gain` the
//! variance reduction of the split.

use serde::{Deserialize, Serialize};

use super::{LabelDistribution, SplitKind, SplitRule};
use crate::dataset::{Column, FeatureSubset, Target, Value};
use crate::error::{Error, Result};

/// Scores closer than this are treated as equal when picking a best split.
pub const TIE_EPS: f64 = 1e-12;

/// Entropy of a class distribution, `-Σ p log2 p` with `0 log 0 = 0`.
pub fn entropy(dist: &LabelDistribution) -> f64 {
    let total = dist.total();
    if total == 0 {
        return 0.0;
    }
    entropy_of_counts(&dist.counts, total)
}

fn entropy_of_counts(counts: &[u64], total: u64) -> f64 {
    let n = total as f64;
    counts
        .iter()
        .filter(|&&c| c > 0)
        .map(|&c| {
            let p = c as f64 / n;
            -p * p.log2()
        })
        .sum()
}

/// Impurity accumulator for one partition: class counts or running moments.
#[derive(Clone, Debug)]
enum Stats {
    Classes(Vec<u64>),
    Moments { n: u64, sum: f64, sum_sq: f64 },
}

impl Stats {
    fn empty_for(target: &Target) -> Self {
        match target {
            Target::Classes(_) => Stats::Classes(Vec::new()),
            Target::Values(_) => Stats::Moments {
                n: 0,
                sum: 0.0,
                sum_sq: 0.0,
            },
        }
    }

    fn add(&mut self, target: &Target, row: usize) {
        match (self, target) {
            (Stats::Classes(counts), Target::Classes(codes)) => {
                let c = codes[row] as usize;
                if c >= counts.len() {
                    counts.resize(c + 1, 0);
                }
                counts[c] += 1;
            }
            (Stats::Moments { n, sum, sum_sq }, Target::Values(ys)) => {
                let y = ys[row];
                *n += 1;
                *sum += y;
                *sum_sq += y * y;
            }
            _ => unreachable!("stats kind always follows the target kind"),
        }
    }

    fn sub(&self, other: &Stats) -> Stats {
        match (self, other) {
            (Stats::Classes(a), Stats::Classes(b)) => {
                // `b` counts a subset of `a`, so it is never longer
                let mut out = a.clone();
                for (x, y) in out.iter_mut().zip(b) {
                    *x -= y;
                }
                Stats::Classes(out)
            }
            (
                Stats::Moments { n, sum, sum_sq },
                Stats::Moments {
                    n: n2,
                    sum: s2,
                    sum_sq: q2,
                },
            ) => Stats::Moments {
                n: n - n2,
                sum: sum - s2,
                sum_sq: sum_sq - q2,
            },
            _ => unreachable!(),
        }
    }

    fn count(&self) -> u64 {
        match self {
            Stats::Classes(c) => c.iter().sum(),
            Stats::Moments { n, .. } => *n,
        }
    }

    fn impurity(&self) -> f64 {
        match self {
            Stats::Classes(c) => {
                let total = c.iter().sum();
                if total == 0 {
                    0.0
                } else {
                    entropy_of_counts(c, total)
                }
            }
            Stats::Moments { n, sum, sum_sq } => {
                if *n == 0 {
                    return 0.0;
                }
                let n = *n as f64;
                let mean = sum / n;
                (sum_sq / n - mean * mean).max(0.0)
            }
        }
    }
}

fn stats_over(target: &Target, rows: &[usize]) -> Stats {
    let mut s = Stats::empty_for(target);
    for &r in rows {
        s.add(target, r);
    }
    s
}

/// Impurity of the target over `rows`: entropy for classes, variance for
/// numeric targets.
pub fn target_impurity(target: &Target, rows: &[usize]) -> f64 {
    stats_over(target, rows).impurity()
}

/// Class distribution of `rows` for a target with `n_classes` classes.
pub fn distribution(codes: &[u32], rows: &[usize], n_classes: usize) -> LabelDistribution {
    let mut d = LabelDistribution::new(n_classes);
    for &r in rows {
        d.add(codes[r]);
    }
    d
}

fn check_rule(fs: &FeatureSubset, rule: &SplitRule) -> Result<()> {
    if rule.feature_index != fs.feature_index() {
        return Err(Error::InvalidArgument(format!(
            "rule on feature {} applied to subset {}",
            rule.feature_index,
            fs.feature_index()
        )));
    }
    let compatible = matches!(
        (&rule.kind, fs.column()),
        (SplitKind::Multiway { .. }, Column::Categorical(_))
            | (SplitKind::Threshold { .. }, Column::Continuous(_))
    );
    if !compatible {
        return Err(Error::InvalidArgument(format!(
            "rule kind does not match feature {} kind",
            fs.feature_index()
        )));
    }
    Ok(())
}

/// Splits `rows` into the rule's branches, preserving row order inside each
/// branch.
pub fn partition_rows(fs: &FeatureSubset, rows: &[usize], rule: &SplitRule) -> Result<Vec<Vec<usize>>> {
    check_rule(fs, rule)?;
    let mut parts = vec![Vec::new(); rule.n_branches()];
    for &r in rows {
        let value: Value = fs.column().get(r);
        let b = rule.branch(value).ok_or_else(|| {
            Error::InvalidArgument(format!("row {r} value {value:?} has no branch in the rule"))
        })?;
        parts[b].push(r);
    }
    Ok(parts)
}

/// Weighted impurity of the rule's partitions: `Σ |S_v|/|S| · H(S_v)`.
pub fn feature_entropy(fs: &FeatureSubset, rows: &[usize], rule: &SplitRule) -> Result<f64> {
    if rows.is_empty() {
        return Err(Error::InvalidArgument("empty row set".into()));
    }
    let parts = partition_rows(fs, rows, rule)?;
    let n = rows.len() as f64;
    Ok(parts
        .iter()
        .filter(|p| !p.is_empty())
        .map(|p| p.len() as f64 / n * target_impurity(fs.target(), p))
        .sum())
}

/// Self-split information `-Σ p_v log2 p_v` of the rule's partition sizes.
pub fn split_info(fs: &FeatureSubset, rows: &[usize], rule: &SplitRule) -> Result<f64> {
    let parts = partition_rows(fs, rows, rule)?;
    let sizes: Vec<u64> = parts.iter().map(|p| p.len() as u64).collect();
    Ok(split_info_of_sizes(&sizes))
}

fn split_info_of_sizes(sizes: &[u64]) -> f64 {
    let total: u64 = sizes.iter().sum();
    if total == 0 {
        0.0
    } else {
        entropy_of_counts(sizes, total)
    }
}

/// Full evaluation of one feature at one node.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GainRatioResult {
    pub feature_index: usize,
    pub entropy_target: f64,
    pub entropy_feature: f64,
    pub split_info: f64,
    pub info_gain: f64,
    pub gain_ratio: f64,
    /// `None` when the feature cannot split the rows (a single observed
    /// value, or no partition satisfying the minimum leaf size).
    pub best_partition: Option<SplitRule>,
}

impl GainRatioResult {
    fn degenerate(feature_index: usize, entropy_target: f64) -> Self {
        GainRatioResult {
            feature_index,
            entropy_target,
            entropy_feature: entropy_target,
            split_info: 0.0,
            info_gain: 0.0,
            gain_ratio: 0.0,
            best_partition: None,
        }
    }

    /// Selection score: gain ratio for classification, variance reduction
    /// for regression.
    pub fn score(&self, regression: bool) -> f64 {
        if regression {
            self.info_gain
        } else {
            self.gain_ratio
        }
    }
}

fn finish(
    feature_index: usize,
    entropy_target: f64,
    entropy_feature: f64,
    split_info: f64,
    rule: SplitRule,
) -> GainRatioResult {
    let mut info_gain = entropy_target - entropy_feature;
    if info_gain < 0.0 && info_gain > -TIE_EPS {
        info_gain = 0.0;
    }
    let gain_ratio = if split_info > 0.0 {
        info_gain / split_info
    } else {
        0.0
    };
    GainRatioResult {
        feature_index,
        entropy_target,
        entropy_feature,
        split_info,
        info_gain,
        gain_ratio,
        best_partition: Some(rule),
    }
}

/// Gain ratio of a feature over `rows`. Categorical features use the full
/// multiway partition over the observed values; continuous features scan
/// every midpoint between consecutive distinct values.
pub fn gain_ratio(fs: &FeatureSubset, rows: &[usize]) -> Result<GainRatioResult> {
    evaluate(fs, rows, 1)
}

/// [`gain_ratio`] restricted to partitions whose branches all hold at least
/// `min_leaf` rows.
pub fn evaluate(fs: &FeatureSubset, rows: &[usize], min_leaf: usize) -> Result<GainRatioResult> {
    if rows.is_empty() {
        return Err(Error::InvalidArgument("empty row set".into()));
    }
    let target = fs.target();
    let whole = stats_over(target, rows);
    let entropy_target = whole.impurity();
    let j = fs.feature_index();
    let regression = matches!(target, Target::Values(_));
    let result = match fs.column() {
        Column::Categorical(codes) => {
            let n_values = rows.iter().map(|&r| codes[r]).max().unwrap() as usize + 1;
            let mut parts: Vec<Option<Stats>> = vec![None; n_values];
            for &r in rows {
                parts[codes[r] as usize]
                    .get_or_insert_with(|| Stats::empty_for(target))
                    .add(target, r);
            }
            let observed: Vec<(u32, Stats)> = parts
                .into_iter()
                .enumerate()
                .filter_map(|(v, s)| s.map(|s| (v as u32, s)))
                .collect();
            if observed.len() < 2 || observed.iter().any(|(_, s)| s.count() < min_leaf as u64) {
                return Ok(GainRatioResult::degenerate(j, entropy_target));
            }
            let n = rows.len() as f64;
            let entropy_feature = observed
                .iter()
                .map(|(_, s)| s.count() as f64 / n * s.impurity())
                .sum();
            let sizes: Vec<u64> = observed.iter().map(|(_, s)| s.count()).collect();
            let rule = SplitRule::multiway(j, observed.iter().map(|(v, _)| *v).collect());
            finish(j, entropy_target, entropy_feature, split_info_of_sizes(&sizes), rule)
        }
        Column::Continuous(xs) => {
            let mut sorted = rows.to_vec();
            sorted.sort_by(|&a, &b| xs[a].total_cmp(&xs[b]).then(a.cmp(&b)));
            let n = sorted.len();
            let mut left = Stats::empty_for(target);
            let mut best: Option<GainRatioResult> = None;
            for i in 0..n - 1 {
                left.add(target, sorted[i]);
                let (lo, hi) = (xs[sorted[i]], xs[sorted[i + 1]]);
                if lo == hi {
                    continue;
                }
                let n_left = i + 1;
                if n_left < min_leaf || n - n_left < min_leaf {
                    continue;
                }
                let right = whole.sub(&left);
                let (wl, wr) = (n_left as f64 / n as f64, (n - n_left) as f64 / n as f64);
                let entropy_feature = wl * left.impurity() + wr * right.impurity();
                let si = split_info_of_sizes(&[n_left as u64, (n - n_left) as u64]);
                let candidate = finish(j, entropy_target, entropy_feature, si, SplitRule::threshold(j, midpoint(lo, hi)));
                let better = match &best {
                    None => true,
                    Some(b) => candidate.score(regression) > b.score(regression) + TIE_EPS,
                };
                if better {
                    best = Some(candidate);
                }
            }
            match best {
                Some(b) => b,
                None => return Ok(GainRatioResult::degenerate(j, entropy_target)),
            }
        }
    };
    Ok(result)
}

fn midpoint(lo: f64, hi: f64) -> f64 {
    let mid = lo + (hi - lo) / 2.0;
    if mid >= hi {
        lo
    } else {
        mid
    }
}

/// Normalized importance `VI_j = GR_j / Σ GR`. All-zero gain ratios give a
/// uniform vector.
pub fn variable_importance(results: &[GainRatioResult]) -> Vec<f64> {
    let total: f64 = results.iter().map(|r| r.gain_ratio).sum();
    if results.is_empty() {
        return Vec::new();
    }
    if total <= 0.0 {
        let u = 1.0 / results.len() as f64;
        return vec![u; results.len()];
    }
    results.iter().map(|r| r.gain_ratio / total).collect()
}
