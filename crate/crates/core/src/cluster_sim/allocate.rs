//! Static allocation of feature subsets to slave nodes.
//!
//! Subsets are placed in index order. Each one is compared against the first
//! node (by rack tag, then node id) that still has free space: if it fits it
//! goes there whole, otherwise it is cut into contiguous row ranges that fill
//! that node and the following ones until the remainder fits.

use serde::{Deserialize, Serialize};

use crate::dataset::{subset_size_bytes, FeatureSubset};
use crate::error::{Error, Result};

/// What the allocator needs to know about a feature subset.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SubsetFootprint {
    pub subset: usize,
    pub size_bytes: u64,
    pub rows: u64,
}

impl From<&FeatureSubset> for SubsetFootprint {
    fn from(fs: &FeatureSubset) -> Self {
        SubsetFootprint {
            subset: fs.feature_index(),
            size_bytes: subset_size_bytes(fs),
            rows: fs.n_rows() as u64,
        }
    }
}

pub fn footprints(subsets: &[FeatureSubset]) -> Vec<SubsetFootprint> {
    subsets.iter().map(SubsetFootprint::from).collect()
}

/// A subset (or a row range of one) stored on a node.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct HostedSubset {
    pub subset: usize,
    pub bytes: u64,
    /// `None` for a whole subset, otherwise the half-open row range.
    pub rows: Option<(u64, u64)>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SlaveNode {
    pub node_id: u32,
    pub capacity_bytes: u64,
    pub available_bytes: u64,
    #[serde(default)]
    pub hosted_subsets: Vec<HostedSubset>,
    /// Placement order key; stands in for sorting nodes by address.
    #[serde(default)]
    pub rack_tag: String,
}

impl SlaveNode {
    pub fn new(node_id: u32, capacity_bytes: u64, rack_tag: impl Into<String>) -> Self {
        SlaveNode {
            node_id,
            capacity_bytes,
            available_bytes: capacity_bytes,
            hosted_subsets: Vec::new(),
            rack_tag: rack_tag.into(),
        }
    }

    pub fn hosted_bytes(&self) -> u64 {
        self.hosted_subsets.iter().map(|h| h.bytes).sum()
    }
}

/// Nodes sorted into placement order.
pub fn placement_order(nodes: &[SlaveNode]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..nodes.len()).collect();
    order.sort_by(|&a, &b| {
        (&nodes[a].rack_tag, nodes[a].node_id).cmp(&(&nodes[b].rack_tag, nodes[b].node_id))
    });
    order
}

/// How a subset relates to the free space of the node it landed on.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scenario {
    /// Larger than the node's free space: split over several nodes.
    A,
    /// Exactly the node's free space.
    B,
    /// Smaller than the node's free space; the node can take more subsets.
    C,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Fragment {
    pub node_id: u32,
    pub bytes: u64,
    pub row_start: u64,
    pub row_end: u64,
}

impl Fragment {
    pub fn rows(&self) -> u64 {
        self.row_end - self.row_start
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PlanEntry {
    pub subset: usize,
    pub size_bytes: u64,
    pub rows: u64,
    pub scenario: Scenario,
    /// One element for scenarios b and c.
    pub fragments: Vec<Fragment>,
}

impl PlanEntry {
    pub fn node_ids(&self) -> Vec<u32> {
        self.fragments.iter().map(|f| f.node_id).collect()
    }

    /// Host that finalises the gain ratio of a fragmented subset.
    pub fn merge_host(&self) -> u32 {
        self.fragments.iter().map(|f| f.node_id).min().expect("placed subset")
    }
}

/// Where every feature subset lives.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct AllocationPlan {
    pub entries: Vec<PlanEntry>,
}

impl AllocationPlan {
    pub fn entry(&self, subset: usize) -> Option<&PlanEntry> {
        self.entries.iter().find(|e| e.subset == subset)
    }

    pub fn nodes_for(&self, subset: usize) -> Vec<u32> {
        self.entry(subset).map(PlanEntry::node_ids).unwrap_or_default()
    }

    pub fn total_bytes(&self) -> u64 {
        self.entries.iter().map(|e| e.size_bytes).sum()
    }

    pub fn placed_bytes(&self) -> u64 {
        self.entries
            .iter()
            .flat_map(|e| &e.fragments)
            .map(|f| f.bytes)
            .sum()
    }
}

/// Row index at byte offset `at` of a subset of `size` bytes and `rows` rows.
fn row_at(at: u64, size: u64, rows: u64) -> u64 {
    if size == 0 {
        return 0;
    }
    (u128::from(at) * u128::from(rows) / u128::from(size)) as u64
}

/// Places `subsets` on `nodes`, updating their free space and hosted lists.
/// On error the nodes are left untouched.
pub fn allocate(subsets: &[SubsetFootprint], nodes: &mut [SlaveNode]) -> Result<AllocationPlan> {
    let total_need: u64 = subsets.iter().map(|s| s.size_bytes).sum();
    let total_free: u64 = nodes.iter().map(|n| n.available_bytes).sum();
    let missing = total_need.saturating_sub(total_free);

    let mut work = nodes.to_vec();
    let order = placement_order(&work);
    let mut entries = Vec::with_capacity(subsets.len());

    for s in subsets {
        let shortfall = || Error::InsufficientCapacity {
            subset: s.subset,
            missing,
        };
        let free: Vec<usize> = order
            .iter()
            .copied()
            .filter(|&i| work[i].available_bytes > 0)
            .collect();
        let Some(&first) = free.first() else {
            if s.size_bytes == 0 {
                return Err(Error::InvalidArgument(format!(
                    "feature subset {} is empty and no node has free space",
                    s.subset
                )));
            }
            return Err(shortfall());
        };

        if s.size_bytes <= work[first].available_bytes {
            let node = &mut work[first];
            let scenario = if s.size_bytes == node.available_bytes {
                Scenario::B
            } else {
                Scenario::C
            };
            node.available_bytes -= s.size_bytes;
            node.hosted_subsets.push(HostedSubset {
                subset: s.subset,
                bytes: s.size_bytes,
                rows: None,
            });
            entries.push(PlanEntry {
                subset: s.subset,
                size_bytes: s.size_bytes,
                rows: s.rows,
                scenario,
                fragments: vec![Fragment {
                    node_id: node.node_id,
                    bytes: s.size_bytes,
                    row_start: 0,
                    row_end: s.rows,
                }],
            });
            continue;
        }

        let mut fragments = Vec::new();
        let mut placed = 0u64;
        for i in free {
            let node = &mut work[i];
            let take = node.available_bytes.min(s.size_bytes - placed);
            let (row_start, row_end) = (
                row_at(placed, s.size_bytes, s.rows),
                row_at(placed + take, s.size_bytes, s.rows),
            );
            node.available_bytes -= take;
            node.hosted_subsets.push(HostedSubset {
                subset: s.subset,
                bytes: take,
                rows: Some((row_start, row_end)),
            });
            fragments.push(Fragment {
                node_id: node.node_id,
                bytes: take,
                row_start,
                row_end,
            });
            placed += take;
            if placed == s.size_bytes {
                break;
            }
        }
        if placed < s.size_bytes {
            return Err(shortfall());
        }
        entries.push(PlanEntry {
            subset: s.subset,
            size_bytes: s.size_bytes,
            rows: s.rows,
            scenario: Scenario::A,
            fragments,
        });
    }

    nodes.clone_from_slice(&work);
    Ok(AllocationPlan { entries })
}
