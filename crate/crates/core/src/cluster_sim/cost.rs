//! Cost parameters, the byte/time ledger, data volume arithmetic and
//! speedup normalisation.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Simulated costs. The defaults are nominal: 1 µs per row, 1 GB/s links and
/// 1 ms to launch a task.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CostModel {
    pub alpha_secs_per_row: f64,
    /// `None` makes every transfer free and instant.
    pub bandwidth_bytes_per_sec: Option<f64>,
    pub task_overhead_secs: f64,
    /// One gain-ratio result sent from a T_GR to its T_NS.
    pub result_record_bytes: u64,
    pub stats_cell_bytes: u64,
    /// Cells in the partition statistics a fragment ships for merging.
    pub partition_stats_cells: u64,
    /// Bytes per row index in a split broadcast.
    pub index_bytes: u64,
}

impl Default for CostModel {
    fn default() -> Self {
        CostModel {
            alpha_secs_per_row: 1e-6,
            bandwidth_bytes_per_sec: Some(1e9),
            task_overhead_secs: 1e-3,
            result_record_bytes: 64,
            stats_cell_bytes: 8,
            partition_stats_cells: 64,
            index_bytes: 8,
        }
    }
}

impl CostModel {
    /// Default compute costs with free communication.
    pub fn zero_comm() -> Self {
        CostModel {
            bandwidth_bytes_per_sec: None,
            ..CostModel::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let ok = self.alpha_secs_per_row >= 0.0
            && self.alpha_secs_per_row.is_finite()
            && self.task_overhead_secs >= 0.0
            && self.task_overhead_secs.is_finite()
            && self.bandwidth_bytes_per_sec.is_none_or(|b| b > 0.0 && b.is_finite());
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidArgument(format!("invalid cost model {self:?}")))
        }
    }

    pub fn task_time(&self, rows: u64) -> f64 {
        self.task_overhead_secs + self.alpha_secs_per_row * rows as f64
    }

    pub fn transfer_time(&self, bytes: u64) -> f64 {
        match self.bandwidth_bytes_per_sec {
            Some(bw) => bytes as f64 / bw,
            None => 0.0,
        }
    }

    pub fn partition_stats_bytes(&self) -> u64 {
        self.partition_stats_cells * self.stats_cell_bytes
    }
}

/// What a training-time transfer carries.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Traffic {
    /// Raw feature subset rows. The scheduler never moves these once
    /// allocated; the counter exists so that can be checked.
    FeatureData,
    ResultRecord,
    PartitionStats,
    SplitBroadcast,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct TrafficBytes {
    pub feature_data: u64,
    pub result_record: u64,
    pub partition_stats: u64,
    pub split_broadcast: u64,
}

impl TrafficBytes {
    pub fn add(&mut self, kind: Traffic, bytes: u64) {
        match kind {
            Traffic::FeatureData => self.feature_data += bytes,
            Traffic::ResultRecord => self.result_record += bytes,
            Traffic::PartitionStats => self.partition_stats += bytes,
            Traffic::SplitBroadcast => self.split_broadcast += bytes,
        }
    }

    pub fn total(&self) -> u64 {
        self.feature_data + self.result_record + self.partition_stats + self.split_broadcast
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct CostLedger {
    pub data_volume_cells: u64,
    pub comm_bytes_allocation: u64,
    pub comm_bytes_training: u64,
    pub training_traffic: TrafficBytes,
    /// Simulated compute seconds per node id.
    pub busy_time: BTreeMap<u32, f64>,
    pub makespan: f64,
    pub tasks_run: u64,
    /// Times an idle node polled the T_NS queue and found nothing ready.
    pub starvation_polls: u64,
}

impl CostLedger {
    pub fn add_training(&mut self, kind: Traffic, bytes: u64) {
        self.comm_bytes_training += bytes;
        self.training_traffic.add(kind, bytes);
    }

    pub fn total_busy(&self) -> f64 {
        self.busy_time.values().sum()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Strategy {
    /// Every tree gets its own physical bootstrap copy of the table.
    HorizontalCopy,
    /// Two-column feature subsets shared by all trees plus the index table.
    PrfMultiplex,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Volume {
    pub data_cells: u64,
    pub index_cells: u64,
}

impl Volume {
    pub fn total(&self) -> u64 {
        self.data_cells + self.index_cells
    }
}

/// Cells held for training `k` trees on `n` rows of `m` columns (target
/// included).
pub fn data_volume(n: u64, m: u64, k: u64, strategy: Strategy) -> Volume {
    match strategy {
        Strategy::HorizontalCopy => Volume {
            data_cells: n * m * k,
            index_cells: 0,
        },
        Strategy::PrfMultiplex => Volume {
            data_cells: n * 2 * m.saturating_sub(1),
            index_cells: k * n,
        },
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpeedupRow {
    pub scenario: String,
    pub makespan: f64,
    /// Makespan with the standalone run scaled to 1.
    pub normalized_time: f64,
    pub speedup: f64,
}

/// Normalises each scenario against the standalone makespan. Speedup is
/// the reciprocal of the normalised time.
pub fn speedup_report(times: &[(String, f64)], standalone: f64) -> Result<Vec<SpeedupRow>> {
    let positive = |t: f64| t > 0.0 && t.is_finite();
    if !positive(standalone) {
        return Err(Error::InvalidArgument(format!(
            "standalone time must be positive, got {standalone}"
        )));
    }
    times
        .iter()
        .map(|(scenario, makespan)| {
            if !positive(*makespan) {
                return Err(Error::InvalidArgument(format!(
                    "time for {scenario} must be positive, got {makespan}"
                )));
            }
            let normalized_time = makespan / standalone;
            Ok(SpeedupRow {
                scenario: scenario.clone(),
                makespan: *makespan,
                normalized_time,
                speedup: 1.0 / normalized_time,
            })
        })
        .collect()
}
