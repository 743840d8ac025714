//! Training task graph of one tree.
//!
//! Every scored tree node yields one gain-ratio task (T_GR) per usable
//! feature and one node-splitting task (T_NS) that collects them. Tasks of
//! nodes at depth `d` form stage `d + 1`. A T_NS feeds the T_GRs of each
//! child it opened, so stages run in sequence along every branch.

use serde::{Deserialize, Serialize};

use super::allocate::AllocationPlan;
use crate::error::{Error, Result};
use crate::tree::{TraceNode, TreeTrace};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Locality {
    #[serde(rename = "NODE_LOCAL")]
    NodeLocal,
    #[serde(rename = "ANY")]
    Any,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "type")]
pub enum TaskKind {
    #[serde(rename = "T_GR")]
    GainRatio {
        tree: usize,
        feature: usize,
        path: Vec<u32>,
    },
    #[serde(rename = "T_NS")]
    NodeSplit { tree: usize, path: Vec<u32> },
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SimTask {
    pub task_id: usize,
    pub kind: TaskKind,
    pub locality: Locality,
    pub deps: Vec<usize>,
    /// Rows the task touches, with bootstrap repeats.
    pub est_rows: u64,
    /// 1-based stage number.
    pub stage: usize,
}

impl SimTask {
    pub fn is_gain_ratio(&self) -> bool {
        matches!(self.kind, TaskKind::GainRatio { .. })
    }

    pub fn feature(&self) -> Option<usize> {
        match self.kind {
            TaskKind::GainRatio { feature, .. } => Some(feature),
            TaskKind::NodeSplit { .. } => None,
        }
    }

    pub fn path(&self) -> &[u32] {
        match &self.kind {
            TaskKind::GainRatio { path, .. } | TaskKind::NodeSplit { path, .. } => path,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TaskDag {
    pub tree_index: usize,
    /// Indexed by `task_id`.
    pub tasks: Vec<SimTask>,
    /// Task ids per stage, stage 1 first.
    pub stages: Vec<Vec<usize>>,
    /// `(from, to)`: `to` waits for `from`.
    pub edges: Vec<(usize, usize)>,
}

impl TaskDag {
    pub fn gain_ratio_count(&self) -> usize {
        self.tasks.iter().filter(|t| t.is_gain_ratio()).count()
    }

    pub fn node_split_count(&self) -> usize {
        self.tasks.len() - self.gain_ratio_count()
    }

    pub fn stage_gain_ratio_count(&self, stage: usize) -> usize {
        self.stages
            .get(stage - 1)
            .map_or(0, |s| s.iter().filter(|&&id| self.tasks[id].is_gain_ratio()).count())
    }
}

struct Builder<'a> {
    tree: usize,
    nodes: &'a [TraceNode],
    n_subsets: usize,
    next: usize,
    tasks: Vec<SimTask>,
    edges: Vec<(usize, usize)>,
}

fn malformed(msg: impl Into<String>) -> Error {
    Error::MalformedTrace(msg.into())
}

impl Builder<'_> {
    fn push(&mut self, kind: TaskKind, locality: Locality, deps: Vec<usize>, rows: u64, depth: usize) -> usize {
        let id = self.tasks.len();
        for &d in &deps {
            self.edges.push((d, id));
        }
        self.tasks.push(SimTask {
            task_id: id,
            kind,
            locality,
            deps,
            est_rows: rows,
            stage: depth + 1,
        });
        id
    }

    /// Consumes the subtree rooted at the next trace node. `usable` holds
    /// the features still available there; `parent_split` is the T_NS that
    /// opened this node.
    fn visit(&mut self, path: &[u32], usable: &[usize], parent_split: Option<usize>) -> Result<()> {
        let Some(node) = self.nodes.get(self.next) else {
            return Err(malformed(format!("missing node at path {path:?}")));
        };
        self.next += 1;
        if node.path != path || node.depth != path.len() {
            return Err(malformed(format!(
                "expected node at path {path:?}, found {:?} (depth {})",
                node.path, node.depth
            )));
        }
        if node.evaluated.iter().any(|f| !usable.contains(f)) {
            return Err(malformed(format!(
                "node {path:?} scores features {:?} outside {usable:?}",
                node.evaluated
            )));
        }
        if let Some(&f) = node.evaluated.iter().find(|&&f| f >= self.n_subsets) {
            return Err(malformed(format!("feature {f} has no subset in the plan")));
        }
        if path.is_empty() && !node.was_evaluated() {
            return Err(malformed("root was not scored"));
        }

        let mut split_task = None;
        if node.was_evaluated() {
            let deps: Vec<usize> = parent_split.into_iter().collect();
            let gr: Vec<usize> = node
                .evaluated
                .iter()
                .map(|&feature| {
                    let kind = TaskKind::GainRatio {
                        tree: self.tree,
                        feature,
                        path: path.to_vec(),
                    };
                    self.push(kind, Locality::NodeLocal, deps.clone(), node.rows, node.depth)
                })
                .collect();
            let kind = TaskKind::NodeSplit {
                tree: self.tree,
                path: path.to_vec(),
            };
            split_task = Some(self.push(kind, Locality::Any, gr, node.rows, node.depth));
        }

        if let Some(split) = &node.split {
            if split_task.is_none() {
                return Err(malformed(format!("node {path:?} split without scoring")));
            }
            if !node.evaluated.contains(&split.feature) {
                return Err(malformed(format!(
                    "node {path:?} split on unscored feature {}",
                    split.feature
                )));
            }
            if split.branches < 2 {
                return Err(malformed(format!("node {path:?} has {} branches", split.branches)));
            }
            let child_usable: Vec<usize> = if split.consumes {
                usable.iter().copied().filter(|&f| f != split.feature).collect()
            } else {
                usable.to_vec()
            };
            let mut child_path = path.to_vec();
            child_path.push(0);
            for b in 0..split.branches {
                *child_path.last_mut().unwrap() = b as u32;
                self.visit(&child_path, &child_usable, split_task)?;
            }
        }
        Ok(())
    }
}

/// Builds the task graph of one traced tree. The plan fixes which feature
/// subsets exist; every scored feature must be one of them.
pub fn build_dag(trace: &TreeTrace, plan: &AllocationPlan) -> Result<TaskDag> {
    let n_subsets = plan.entries.iter().map(|e| e.subset + 1).max().unwrap_or(0);
    let Some(root) = trace.nodes.first() else {
        return Err(malformed("trace has no nodes"));
    };
    let mut b = Builder {
        tree: trace.tree_index,
        nodes: &trace.nodes,
        n_subsets,
        next: 0,
        tasks: Vec::new(),
        edges: Vec::new(),
    };
    let root_usable = root.evaluated.clone();
    b.visit(&[], &root_usable, None)?;
    if b.next != trace.nodes.len() {
        return Err(malformed(format!(
            "{} trailing nodes after the tree",
            trace.nodes.len() - b.next
        )));
    }

    let n_stages = b.tasks.iter().map(|t| t.stage).max().unwrap_or(0);
    let mut stages = vec![Vec::new(); n_stages];
    for t in &b.tasks {
        stages[t.stage - 1].push(t.task_id);
    }
    Ok(TaskDag {
        tree_index: trace.tree_index,
        tasks: b.tasks,
        stages,
        edges: b.edges,
    })
}
