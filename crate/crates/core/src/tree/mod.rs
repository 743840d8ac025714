//! Decision tree induction with the C4.5 gain ratio.
//!
//! [`measure`] has the entropy family of functions, [`select`] picks the
//! `m` features a tree may use, [`grow`] builds a tree over one bootstrap
//! sample and [`trace`] turns a trained tree into the per-node record the
//! cluster simulator consumes.

pub mod grow;
pub mod measure;
pub mod select;
pub mod trace;

use serde::{Deserialize, Serialize};

use crate::dataset::{check_sample, Schema, Value, UNSEEN_CATEGORY};
use crate::error::{Error, Result};

pub use grow::train_tree;
pub use measure::{
    entropy, feature_entropy, gain_ratio, split_info, variable_importance, GainRatioResult,
};
pub use select::dimension_reduce;
pub use trace::{TraceNode, TraceSplit, TreeTrace};

/// Class counts at a node, indexed by class code.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabelDistribution {
    pub counts: Vec<u64>,
}

impl LabelDistribution {
    pub fn new(n_classes: usize) -> Self {
        LabelDistribution {
            counts: vec![0; n_classes],
        }
    }

    pub fn from_counts(counts: Vec<u64>) -> Self {
        LabelDistribution { counts }
    }

    pub fn add(&mut self, class: u32) {
        self.counts[class as usize] += 1;
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    /// Number of classes actually present.
    pub fn n_present(&self) -> usize {
        self.counts.iter().filter(|&&c| c > 0).count()
    }

    pub fn is_pure(&self) -> bool {
        self.n_present() <= 1
    }

    /// Most frequent class, lowest code on ties.
    pub fn majority(&self) -> u32 {
        let mut best = 0;
        for (c, &n) in self.counts.iter().enumerate() {
            if n > self.counts[best] {
                best = c;
            }
        }
        best as u32
    }
}

/// How a node partitions its rows.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum SplitKind {
    /// One branch per listed category code, in list order.
    Multiway { values: Vec<u32> },
    /// Branch 0 takes `x <= cut`, branch 1 takes `x > cut`.
    Threshold { cut: f64 },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SplitRule {
    pub feature_index: usize,
    #[serde(flatten)]
    pub kind: SplitKind,
}

impl SplitRule {
    pub fn multiway(feature_index: usize, values: Vec<u32>) -> Self {
        SplitRule {
            feature_index,
            kind: SplitKind::Multiway { values },
        }
    }

    pub fn threshold(feature_index: usize, cut: f64) -> Self {
        SplitRule {
            feature_index,
            kind: SplitKind::Threshold { cut },
        }
    }

    pub fn n_branches(&self) -> usize {
        match &self.kind {
            SplitKind::Multiway { values } => values.len(),
            SplitKind::Threshold { .. } => 2,
        }
    }

    /// Categorical splits use the feature up for the whole subtree.
    pub fn consumes_feature(&self) -> bool {
        matches!(self.kind, SplitKind::Multiway { .. })
    }

    /// Branch taken by a value, or `None` when the rule has no branch for it
    /// (unseen category or a value of the wrong kind).
    pub fn branch(&self, value: Value) -> Option<usize> {
        match (&self.kind, value) {
            (SplitKind::Multiway { values }, Value::Category(c)) if c != UNSEEN_CATEGORY => {
                values.iter().position(|&v| v == c)
            }
            (SplitKind::Threshold { cut }, Value::Number(x)) => Some(usize::from(x > *cut)),
            _ => None,
        }
    }
}

/// Why a node became a leaf.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    Pure,
    MaxDepth,
    MinSamples,
    /// No usable feature left at the node.
    NoFeatures,
    /// Features were evaluated but none had a positive score.
    NoGain,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "output", rename_all = "snake_case")]
pub enum LeafValue {
    Classes { distribution: LabelDistribution },
    Mean { value: f64 },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "node", rename_all = "snake_case")]
pub enum TreeNode {
    Internal {
        rule: SplitRule,
        children: Vec<TreeNode>,
        majority_child: usize,
        /// Training rows reaching the node, counted with multiplicity.
        rows: u64,
    },
    Leaf {
        #[serde(flatten)]
        value: LeafValue,
        rows: u64,
        stop: StopReason,
    },
}

impl TreeNode {
    pub fn rows(&self) -> u64 {
        match self {
            TreeNode::Internal { rows, .. } | TreeNode::Leaf { rows, .. } => *rows,
        }
    }

    pub fn is_leaf(&self) -> bool {
        matches!(self, TreeNode::Leaf { .. })
    }

    pub fn internal_count(&self) -> usize {
        match self {
            TreeNode::Leaf { .. } => 0,
            TreeNode::Internal { children, .. } => {
                1 + children.iter().map(TreeNode::internal_count).sum::<usize>()
            }
        }
    }

    pub fn leaf_count(&self) -> usize {
        match self {
            TreeNode::Leaf { .. } => 1,
            TreeNode::Internal { children, .. } => children.iter().map(TreeNode::leaf_count).sum(),
        }
    }

    /// Number of edges on the longest root-to-leaf path.
    pub fn depth(&self) -> usize {
        match self {
            TreeNode::Leaf { .. } => 0,
            TreeNode::Internal { children, .. } => {
                1 + children.iter().map(TreeNode::depth).max().unwrap_or(0)
            }
        }
    }
}

/// Output of a single tree or of the forest.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Prediction {
    Class(u32),
    Value(f64),
}

impl Prediction {
    pub fn class(self) -> Option<u32> {
        match self {
            Prediction::Class(c) => Some(c),
            Prediction::Value(_) => None,
        }
    }

    pub fn value(self) -> Option<f64> {
        match self {
            Prediction::Value(v) => Some(v),
            Prediction::Class(_) => None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DecisionTree {
    pub tree_index: usize,
    /// Features chosen by [`dimension_reduce`], top-by-importance first.
    pub selected_features: Vec<usize>,
    /// Importance of every input feature over this tree's bootstrap sample.
    pub importance: Vec<f64>,
    /// Out-of-bag accuracy, the tree's voting weight.
    pub oob_accuracy: f64,
    /// Size of the out-of-bag set the accuracy was measured on.
    pub oob_size: usize,
    pub root: TreeNode,
}

impl DecisionTree {
    /// Routes a sample to a leaf. Values with no matching branch follow the
    /// node's majority child.
    pub fn predict(&self, sample: &[Value]) -> Prediction {
        let mut node = &self.root;
        loop {
            match node {
                TreeNode::Internal {
                    rule,
                    children,
                    majority_child,
                    ..
                } => {
                    let value = sample[rule.feature_index];
                    node = &children[rule.branch(value).unwrap_or(*majority_child)];
                }
                TreeNode::Leaf { value, .. } => {
                    return match value {
                        LeafValue::Classes { distribution } => {
                            Prediction::Class(distribution.majority())
                        }
                        LeafValue::Mean { value } => Prediction::Value(*value),
                    };
                }
            }
        }
    }

    pub fn internal_count(&self) -> usize {
        self.root.internal_count()
    }

    pub fn depth(&self) -> usize {
        self.root.depth()
    }
}

/// Validates the sample against the schema, then predicts.
pub fn predict_tree(t: &DecisionTree, schema: &Schema, sample: &[Value]) -> Result<Prediction> {
    check_sample(schema, sample)?;
    Ok(t.predict(sample))
}

/// Training parameters. `m_selected` and `k_top` default from the feature
/// count when `None`: `m = min(ceil(log2 M) + 1, M - 1)` and
/// `k_top = min(ceil(sqrt m), m - 1)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Hyperparams {
    pub k_trees: usize,
    pub m_selected: Option<usize>,
    pub k_top: Option<usize>,
    pub max_depth: usize,
    pub min_samples_split: usize,
    pub min_leaf_size: usize,
    pub seed: u64,
}

impl Default for Hyperparams {
    fn default() -> Self {
        Hyperparams {
            k_trees: 100,
            m_selected: None,
            k_top: None,
            max_depth: 32,
            min_samples_split: 2,
            min_leaf_size: 1,
            seed: 0,
        }
    }
}

/// Feature-selection sizes after defaults are applied.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Selection {
    pub m_selected: usize,
    pub k_top: usize,
}

impl Hyperparams {
    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_trees(mut self, k: usize) -> Self {
        self.k_trees = k;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidArgument(msg));
        if self.k_trees == 0 {
            return bad("k_trees must be at least 1".into());
        }
        if self.max_depth == 0 {
            return bad("max_depth must be at least 1".into());
        }
        if self.min_samples_split < 2 {
            return bad("min_samples_split must be at least 2".into());
        }
        if self.min_leaf_size == 0 {
            return bad("min_leaf_size must be at least 1".into());
        }
        if self.m_selected == Some(0) {
            return bad("m_selected must be at least 1".into());
        }
        Ok(())
    }

    /// Resolves `m_selected` / `k_top` for `n_features = M - 1` inputs.
    pub fn selection(&self, n_features: usize) -> Result<Selection> {
        self.validate()?;
        if n_features == 0 {
            return Err(Error::InvalidArgument("no input features".into()));
        }
        let m_total = n_features + 1;
        let m_selected = match self.m_selected {
            Some(m) => m,
            None => ((m_total as f64).log2().ceil() as usize + 1).min(n_features),
        };
        if m_selected > n_features {
            return Err(Error::InvalidArgument(format!(
                "m_selected = {m_selected} exceeds the {n_features} input features"
            )));
        }
        let k_top = match self.k_top {
            Some(k) => k,
            None => ((m_selected as f64).sqrt().ceil() as usize).min(m_selected - 1),
        };
        if k_top > m_selected {
            return Err(Error::InvalidArgument(format!(
                "k_top = {k_top} exceeds m_selected = {m_selected}"
            )));
        }
        Ok(Selection { m_selected, k_top })
    }
}
