//! Cost simulation of column-partitioned training on a cluster.
//!
//! The simulator replays a finished forest: feature subsets are placed on
//! slave nodes, each tree's trace becomes a task DAG, and the DAGs are
//! dispatched under a cost model. Nothing is computed for real, so results
//! are exact and repeatable.

pub mod allocate;
pub mod cost;
pub mod dag;
pub mod schedule;

use serde::{Deserialize, Serialize};

use crate::dataset::{subset_size_for, Schema};
use crate::error::{Error, Result};
use crate::forest::Forest;
use crate::tree::TreeTrace;

pub use allocate::{allocate, AllocationPlan, Scenario, SlaveNode, SubsetFootprint};
pub use cost::{data_volume, speedup_report, CostLedger, CostModel, SpeedupRow, Strategy, Volume};
pub use dag::{build_dag, Locality, SimTask, TaskDag, TaskKind};
pub use schedule::{schedule, ScheduleTrace, TraceEvent};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NodeSpec {
    pub node_id: u32,
    pub capacity_bytes: u64,
    #[serde(default)]
    pub rack_tag: String,
}

/// Cluster description file: the nodes, cost parameters (all optional, at
/// the top level) and the node counts for the scaling table.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClusterSpec {
    pub nodes: Vec<NodeSpec>,
    #[serde(flatten)]
    pub cost: CostModel,
    #[serde(default)]
    pub node_counts: Vec<usize>,
}

impl ClusterSpec {
    pub fn from_json(text: &str) -> Result<Self> {
        let spec: ClusterSpec = serde_json::from_str(text)?;
        if spec.nodes.is_empty() {
            return Err(Error::InvalidArgument("cluster file lists no nodes".into()));
        }
        if spec.node_counts.contains(&0) {
            return Err(Error::InvalidArgument("node counts must be at least 1".into()));
        }
        spec.cost.validate()?;
        Ok(spec)
    }

    pub fn load(path: impl AsRef<std::path::Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }

    pub fn slave_nodes(&self) -> Vec<SlaveNode> {
        self.nodes
            .iter()
            .map(|n| SlaveNode::new(n.node_id, n.capacity_bytes, n.rack_tag.clone()))
            .collect()
    }
}

/// Serialized subset sizes for a table of `rows` records.
pub fn schema_footprints(schema: &Schema, rows: u64) -> Vec<SubsetFootprint> {
    schema
        .features
        .iter()
        .enumerate()
        .map(|(j, f)| SubsetFootprint {
            subset: j,
            size_bytes: subset_size_for(f.kind, schema.target.kind, rows),
            rows,
        })
        .collect()
}

pub fn forest_traces(forest: &Forest) -> Vec<TreeTrace> {
    forest.trees.iter().map(|t| t.trace()).collect()
}

#[derive(Clone, Debug)]
pub struct Simulation {
    pub nodes: Vec<SlaveNode>,
    pub plan: AllocationPlan,
    pub dags: Vec<TaskDag>,
    pub trace: ScheduleTrace,
    pub ledger: CostLedger,
}

/// Allocates, builds every DAG and schedules them on `nodes`.
pub fn simulate(
    traces: &[TreeTrace],
    footprints: &[SubsetFootprint],
    mut nodes: Vec<SlaveNode>,
    cost: &CostModel,
) -> Result<Simulation> {
    let plan = allocate(footprints, &mut nodes)?;
    let dags = traces
        .iter()
        .map(|t| build_dag(t, &plan))
        .collect::<Result<Vec<_>>>()?;
    let (trace, ledger) = schedule(&dags, &plan, &nodes, cost)?;
    Ok(Simulation {
        nodes,
        plan,
        dags,
        trace,
        ledger,
    })
}

/// `n` identical nodes whose combined capacity just holds `total_bytes`.
pub fn balanced_cluster(n: usize, total_bytes: u64) -> Vec<SlaveNode> {
    let cap = total_bytes.div_ceil(n.max(1) as u64).max(1);
    (0..n as u32).map(|i| SlaveNode::new(i, cap, "rack0")).collect()
}

/// Makespan at each node count on balanced clusters, relative to one node
/// holding everything.
pub fn scaling_table(
    traces: &[TreeTrace],
    footprints: &[SubsetFootprint],
    cost: &CostModel,
    node_counts: &[usize],
) -> Result<Vec<SpeedupRow>> {
    let total: u64 = footprints.iter().map(|f| f.size_bytes).sum();
    let standalone = simulate(traces, footprints, balanced_cluster(1, total), cost)?
        .ledger
        .makespan;
    let mut times = Vec::with_capacity(node_counts.len());
    for &n in node_counts {
        let sim = simulate(traces, footprints, balanced_cluster(n, total), cost)?;
        times.push((format!("{n} nodes"), sim.ledger.makespan));
    }
    speedup_report(&times, standalone)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cluster_file_defaults() {
        let spec = ClusterSpec::from_json(
            r#"{"nodes": [{"node_id": 3, "capacity_bytes": 100}], "bandwidth_bytes_per_sec": 5e8}"#,
        )
        .unwrap();
        assert_eq!(spec.cost.bandwidth_bytes_per_sec, Some(5e8));
        assert_eq!(spec.cost.alpha_secs_per_row, 1e-6);
        assert!(spec.node_counts.is_empty());
        assert_eq!(spec.slave_nodes()[0].available_bytes, 100);
        let free = ClusterSpec::from_json(
            r#"{"nodes": [{"node_id": 0, "capacity_bytes": 1}], "bandwidth_bytes_per_sec": null}"#,
        )
        .unwrap();
        assert_eq!(free.cost, CostModel::zero_comm());
        assert!(ClusterSpec::from_json(r#"{"nodes": []}"#).is_err());
        assert!(ClusterSpec::from_json(r#"{"nodes": [{"node_id": 0, "capacity_bytes": 1}], "node_counts": [0]}"#).is_err());
    }

    #[test]
    fn balanced_cluster_holds_everything() {
        let nodes = balanced_cluster(3, 10);
        assert_eq!(nodes.iter().map(|n| n.capacity_bytes).sum::<u64>(), 12);
    }
}
