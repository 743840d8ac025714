//! Per-node record of how a tree was grown.
//!
//! The cluster simulator rebuilds the training task graph from this record:
//! which nodes had their features scored, which features, over how many
//! rows, and how each node split. Everything is recoverable from the trained
//! model, so a saved forest is enough to replay its training cost.

use serde::{Deserialize, Serialize};

use super::{DecisionTree, StopReason, TreeNode};

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TraceSplit {
    pub feature: usize,
    pub branches: usize,
    /// Multiway splits on categorical features remove the feature from the
    /// subtree.
    pub consumes: bool,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TraceNode {
    /// Branch indexes from the root; the root has an empty path.
    pub path: Vec<u32>,
    pub depth: usize,
    /// Rows reaching the node, with bootstrap repeats.
    pub rows: u64,
    /// Features scored at this node, ascending. Empty when the node was
    /// closed without scoring (pure, too small, depth cap, nothing usable).
    pub evaluated: Vec<usize>,
    pub split: Option<TraceSplit>,
}

impl TraceNode {
    pub fn was_evaluated(&self) -> bool {
        !self.evaluated.is_empty()
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TreeTrace {
    pub tree_index: usize,
    pub selected_features: Vec<usize>,
    /// Nodes in depth-first pre-order.
    pub nodes: Vec<TraceNode>,
}

impl DecisionTree {
    /// The root is always scored (feature selection needs its gain ratios);
    /// other nodes are scored when they split or stopped for lack of gain.
    pub fn trace(&self) -> TreeTrace {
        let mut usable = self.selected_features.clone();
        usable.sort_unstable();
        let mut nodes = Vec::new();
        walk(&self.root, &mut Vec::new(), &usable, &mut nodes);
        TreeTrace {
            tree_index: self.tree_index,
            selected_features: self.selected_features.clone(),
            nodes,
        }
    }
}

fn walk(node: &TreeNode, path: &mut Vec<u32>, usable: &[usize], out: &mut Vec<TraceNode>) {
    let depth = path.len();
    match node {
        TreeNode::Leaf { rows, stop, .. } => {
            let evaluated = if depth == 0 || *stop == StopReason::NoGain {
                usable.to_vec()
            } else {
                Vec::new()
            };
            out.push(TraceNode {
                path: path.clone(),
                depth,
                rows: *rows,
                evaluated,
                split: None,
            });
        }
        TreeNode::Internal {
            rule, children, rows, ..
        } => {
            out.push(TraceNode {
                path: path.clone(),
                depth,
                rows: *rows,
                evaluated: usable.to_vec(),
                split: Some(TraceSplit {
                    feature: rule.feature_index,
                    branches: children.len(),
                    consumes: rule.consumes_feature(),
                }),
            });
            let child_usable: Vec<usize> = if rule.consumes_feature() {
                usable.iter().copied().filter(|&j| j != rule.feature_index).collect()
            } else {
                usable.to_vec()
            };
            for (b, child) in children.iter().enumerate() {
                path.push(b as u32);
                walk(child, path, &child_usable, out);
                path.pop();
            }
        }
    }
}
