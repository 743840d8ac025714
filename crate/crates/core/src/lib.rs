//! Random forest training and prediction with gain-ratio dimension
//! reduction, out-of-bag weighted voting, and a deterministic simulator for
//! the column-partitioned distributed execution of the training DAG.
//!
//! The crate is organised bottom-up:
//!
//! * [`dataset`] loads CSV data against a declared schema and splits it into
//!   one [`dataset::FeatureSubset`] per input column.
//! * [`sampling`] draws bootstrap samples as a table of row indexes and
//!   derives out-of-bag sets from it.
//! * [`tree`] holds the entropy / gain-ratio measures, the per-tree feature
//!   selection and decision tree induction.
//! * [`forest`] trains the ensemble and performs weighted voting.
//! * [`cluster_sim`] allocates feature subsets to simulated slave nodes,
//!   expands trained trees into task DAGs and schedules them under a cost
//!   model.
//! * [`cli`] (feature `cli`) wires everything into the `prf` binary.

pub mod cluster_sim;
pub mod dataset;
pub mod error;
pub mod forest;
pub mod sampling;
pub mod seed;
pub mod tree;

#[cfg(feature = "cli")]
pub mod cli;

pub use error::{Error, Result};
