//! The ensemble: bootstrap by index table, one tree per sample, OOB accuracy
//! as each tree's voting weight.

use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::dataset::{check_sample, vertical_partition, Dataset, Sample, Schema, Target, Value};
use crate::error::{Error, Result};
use crate::sampling::{build_dsi, oob_indices, DsiTable, OobSet};
use crate::seed;
use crate::tree::{train_tree, DecisionTree, Hyperparams, Prediction};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Forest {
    pub schema: Schema,
    pub hyperparams: Hyperparams,
    /// Training record count, needed to size feature subsets when replaying
    /// training on a simulated cluster.
    pub n_rows: usize,
    /// SHA-256 of the serialized bootstrap index table.
    pub dsi_digest: String,
    pub trees: Vec<DecisionTree>,
}

/// How regression outputs are combined.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RegressionMode {
    /// `Σ w_i h_i(x) / Σ w_i`.
    #[default]
    Normalized,
    /// `(1/k) Σ w_i h_i(x)`, which shrinks toward zero when weights are
    /// below one.
    PaperLiteral,
}

impl std::str::FromStr for RegressionMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "normalized" => Ok(RegressionMode::Normalized),
            "paper-literal" => Ok(RegressionMode::PaperLiteral),
            other => Err(format!("unknown regression mode {other:?}")),
        }
    }
}

/// Accuracy of one tree on its out-of-bag rows.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TreeAccuracy {
    pub value: f64,
    pub evaluated: usize,
    /// The OOB set was empty; the tree gets weight 0.
    pub empty: bool,
}

/// Share of OOB rows the tree predicts correctly. For a regression target
/// the score is the OOB coefficient of determination clipped to `[0, 1]`.
pub fn tree_accuracy(t: &DecisionTree, oob: &OobSet, d: &Dataset) -> TreeAccuracy {
    if oob.is_empty() {
        log::warn!("tree {} has an empty out-of-bag set; weight set to 0", t.tree_index);
        return TreeAccuracy {
            value: 0.0,
            evaluated: 0,
            empty: true,
        };
    }
    let value = match d.target() {
        Target::Classes(codes) => {
            let correct = oob
                .row_indexes
                .iter()
                .filter(|&&r| t.predict(&d.sample(r)) == Prediction::Class(codes[r]))
                .count();
            correct as f64 / oob.len() as f64
        }
        Target::Values(ys) => {
            let n = oob.len() as f64;
            let mean = oob.row_indexes.iter().map(|&r| ys[r]).sum::<f64>() / n;
            let (mut sse, mut sst) = (0.0, 0.0);
            for &r in &oob.row_indexes {
                let p = t.predict(&d.sample(r)).value().unwrap_or(0.0);
                sse += (ys[r] - p).powi(2);
                sst += (ys[r] - mean).powi(2);
            }
            if sst > 0.0 {
                (1.0 - sse / sst).clamp(0.0, 1.0)
            } else if sse == 0.0 {
                1.0
            } else {
                0.0
            }
        }
    };
    TreeAccuracy {
        value,
        evaluated: oob.len(),
        empty: false,
    }
}

/// A trained forest together with the index table it was sampled from.
pub struct Trained {
    pub forest: Forest,
    pub dsi: DsiTable,
}

pub fn train(d: &Dataset, h: &Hyperparams) -> Result<Forest> {
    train_with_dsi(d, h).map(|t| t.forest)
}

/// Trains `h.k_trees` trees. Trees are independent and, with the `parallel`
/// feature, grown concurrently; each draws from its own seeded stream, so
/// the result does not depend on scheduling.
pub fn train_with_dsi(d: &Dataset, h: &Hyperparams) -> Result<Trained> {
    h.validate()?;
    if d.n_rows() == 0 {
        return Err(Error::InvalidArgument("cannot train on an empty dataset".into()));
    }
    let subsets = vertical_partition(d)?;
    h.selection(subsets.len())?;
    let dsi = build_dsi(d.n_rows(), h.k_trees, h.seed)?;

    let grow = |i: usize| -> Result<DecisionTree> {
        let mut rng = seed::rng(h.seed, seed::TREE_STREAM, i as u64);
        let mut tree = train_tree(&dsi.row(i), &subsets, h, &mut rng, i)?;
        let oob = oob_indices(&dsi, i)?;
        let acc = tree_accuracy(&tree, &oob, d);
        tree.oob_accuracy = acc.value;
        tree.oob_size = acc.evaluated;
        Ok(tree)
    };

    #[cfg(feature = "parallel")]
    let trees = {
        use rayon::prelude::*;
        (0..h.k_trees).into_par_iter().map(grow).collect::<Result<Vec<_>>>()?
    };
    #[cfg(not(feature = "parallel"))]
    let trees = (0..h.k_trees).map(grow).collect::<Result<Vec<_>>>()?;

    let forest = Forest {
        schema: d.schema().clone(),
        hyperparams: h.clone(),
        n_rows: d.n_rows(),
        dsi_digest: dsi.digest(),
        trees,
    };
    Ok(Trained { forest, dsi })
}

/// Weighted plurality over class votes `(class, weight)`. Returns the
/// winning class (lowest code on ties) and the per-class tallies.
pub fn weighted_vote(votes: &[(u32, f64)], n_classes: usize) -> (u32, Vec<f64>) {
    let mut tally = vec![0.0; n_classes];
    for &(c, w) in votes {
        tally[c as usize] += w;
    }
    let mut best = 0;
    for (c, &t) in tally.iter().enumerate() {
        if t > tally[best] {
            best = c;
        }
    }
    (best as u32, tally)
}

/// Voting weights of the trees; all ones when every weight is zero.
fn effective_weights(weights: impl Iterator<Item = f64> + Clone) -> Vec<f64> {
    if weights.clone().any(|w| w > 0.0) {
        weights.collect()
    } else {
        weights.map(|_| 1.0).collect()
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct PredictionReport {
    pub outputs: Vec<Prediction>,
    /// Per-sample, per-class weighted tallies (classification only).
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub tallies: Vec<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub oob_error: Option<f64>,
}

impl PredictionReport {
    /// CSV with `row_id,prediction` and, for classification, one
    /// `tally_<class>` column per class.
    pub fn write_csv<W: Write>(&self, out: W, schema: &Schema) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let mut header = vec!["row_id".to_string(), "prediction".to_string()];
        if schema.is_classification() {
            header.extend(schema.target.classes.iter().map(|c| format!("tally_{c}")));
        }
        w.write_record(&header)?;
        for (i, p) in self.outputs.iter().enumerate() {
            let mut rec = vec![i.to_string()];
            match p {
                Prediction::Class(c) => rec.push(schema.class_label(*c).to_string()),
                Prediction::Value(v) => rec.push(v.to_string()),
            }
            if let Some(t) = self.tallies.get(i) {
                rec.extend(t.iter().map(f64::to_string));
            }
            w.write_record(&rec)?;
        }
        w.flush().map_err(|e| Error::io("<csv output>", e))?;
        Ok(())
    }
}

impl Forest {
    pub fn k(&self) -> usize {
        self.trees.len()
    }

    pub fn is_classification(&self) -> bool {
        self.schema.is_classification()
    }

    pub fn weights(&self) -> Vec<f64> {
        self.trees.iter().map(|t| t.oob_accuracy).collect()
    }

    /// Mean per-tree importance vector.
    pub fn importance(&self) -> Vec<f64> {
        let n = self.schema.n_features();
        let mut acc = vec![0.0; n];
        for t in &self.trees {
            for (a, v) in acc.iter_mut().zip(&t.importance) {
                *a += v;
            }
        }
        let k = self.trees.len().max(1) as f64;
        acc.iter().map(|a| a / k).collect()
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let f: Forest = serde_json::from_str(text)?;
        f.schema.validate()?;
        if f.trees.iter().any(|t| !(0.0..=1.0).contains(&t.oob_accuracy)) {
            return Err(Error::Model("tree weight outside [0, 1]".into()));
        }
        Ok(f)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_json()?).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }

    pub fn predict(&self, samples: &[Sample], mode: RegressionMode) -> Result<PredictionReport> {
        if self.is_classification() {
            predict_classification(self, samples)
        } else {
            predict_regression(self, samples, mode)
        }
    }
}

/// Weighted plurality vote: class `c` scores `Σ CA_i · [h_i(x) = c]`.
pub fn predict_classification(f: &Forest, samples: &[Sample]) -> Result<PredictionReport> {
    if !f.is_classification() {
        return Err(Error::Model("regression forest used for classification".into()));
    }
    let weights = effective_weights(f.trees.iter().map(|t| t.oob_accuracy));
    let n_classes = f.schema.n_classes();
    let mut report = PredictionReport::default();
    for x in samples {
        check_sample(&f.schema, x)?;
        let votes: Vec<(u32, f64)> = f
            .trees
            .iter()
            .zip(&weights)
            .map(|(t, &w)| (t.predict(x).class().expect("classification tree"), w))
            .collect();
        let (class, tally) = weighted_vote(&votes, n_classes);
        report.outputs.push(Prediction::Class(class));
        report.tallies.push(tally);
    }
    Ok(report)
}

/// Weighted mean of tree outputs, see [`RegressionMode`].
pub fn predict_regression(f: &Forest, samples: &[Sample], mode: RegressionMode) -> Result<PredictionReport> {
    if f.is_classification() {
        return Err(Error::Model("classification forest used for regression".into()));
    }
    let mut report = PredictionReport::default();
    for x in samples {
        check_sample(&f.schema, x)?;
        let outputs: Vec<f64> = f
            .trees
            .iter()
            .map(|t| t.predict(x).value().expect("regression tree"))
            .collect();
        report
            .outputs
            .push(Prediction::Value(combine_regression(&outputs, &f.weights(), mode)));
    }
    Ok(report)
}

/// Combines per-tree outputs with weights. A normalized combination with
/// all-zero weights falls back to the plain mean.
pub fn combine_regression(outputs: &[f64], weights: &[f64], mode: RegressionMode) -> f64 {
    let k = outputs.len() as f64;
    let weighted: f64 = outputs.iter().zip(weights).map(|(h, w)| h * w).sum();
    match mode {
        RegressionMode::PaperLiteral => weighted / k,
        RegressionMode::Normalized => {
            let total: f64 = weights.iter().sum();
            if total > 0.0 {
                weighted / total
            } else {
                outputs.iter().sum::<f64>() / k
            }
        }
    }
}

/// Out-of-bag estimate of the forest's error.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct OobError {
    /// Misclassification rate (classification) or mean squared error
    /// (regression) over rows with at least one OOB vote.
    pub rate: f64,
    pub rows_scored: usize,
    pub votes_cast: usize,
}

/// Aggregates, for every row, the weighted votes of the trees whose OOB set
/// contains it. Rows no tree left out are not scored.
pub fn oob_error(f: &Forest, d: &Dataset, t: &DsiTable) -> Result<OobError> {
    if t.k() != f.k() || t.n() != d.n_rows() || t.digest() != f.dsi_digest {
        return Err(Error::InvalidArgument(
            "index table does not belong to this forest and dataset".into(),
        ));
    }
    let n = d.n_rows();
    let mut votes: Vec<Vec<(Prediction, f64)>> = vec![Vec::new(); n];
    let mut votes_cast = 0;
    for (i, tree) in f.trees.iter().enumerate() {
        for &r in &oob_indices(t, i)?.row_indexes {
            votes[r].push((tree.predict(&d.sample(r)), tree.oob_accuracy));
            votes_cast += 1;
        }
    }
    let mut scored = 0;
    let mut loss = 0.0;
    for (r, row_votes) in votes.iter().enumerate() {
        if row_votes.is_empty() {
            continue;
        }
        scored += 1;
        let weights = effective_weights(row_votes.iter().map(|(_, w)| *w));
        match d.target().get(r) {
            Value::Category(truth) => {
                let ballots: Vec<(u32, f64)> = row_votes
                    .iter()
                    .zip(&weights)
                    .map(|((p, _), &w)| (p.class().expect("classification tree"), w))
                    .collect();
                let (winner, _) = weighted_vote(&ballots, f.schema.n_classes());
                if winner != truth {
                    loss += 1.0;
                }
            }
            Value::Number(truth) => {
                let outputs: Vec<f64> = row_votes.iter().map(|(p, _)| p.value().unwrap()).collect();
                let p = combine_regression(&outputs, &weights, RegressionMode::Normalized);
                loss += (p - truth).powi(2);
            }
        }
    }
    if scored == 0 {
        return Err(Error::UndefinedOobError);
    }
    Ok(OobError {
        rate: loss / scored as f64,
        rows_scored: scored,
        votes_cast,
    })
}
