//! Three interactive views over the core crate, exported to JavaScript.
//! Every function takes the CSV text and schema JSON the page holds and
//! returns a JSON string; errors come back as JavaScript exceptions.
//!
//! The `*_json` functions are plain Rust so they can be tested natively.

use prf::cluster_sim::{forest_traces, scaling_table, schema_footprints, CostModel};
use prf::dataset::{read_csv, vertical_partition, Dataset, Schema};
use prf::forest::{oob_error, train, Forest};
use prf::sampling::build_dsi;
use prf::tree::{gain_ratio, variable_importance, Hyperparams};
use serde_json::json;
use wasm_bindgen::prelude::*;

fn load(csv: &str, schema: &str) -> Result<Dataset, String> {
    let schema = Schema::from_json(schema).map_err(|e| e.to_string())?;
    read_csv(csv.as_bytes(), &schema).map_err(|e| e.to_string())
}

fn forest(d: &Dataset, trees: usize, seed: u64) -> Result<Forest, String> {
    let h = Hyperparams::default().with_trees(trees).with_seed(seed);
    train(d, &h).map_err(|e| e.to_string())
}

/// Entropy, gain, split information, gain ratio and importance of every
/// feature over the whole table.
pub fn gain_ratios_json(csv: &str, schema: &str) -> Result<String, String> {
    let d = load(csv, schema)?;
    let rows: Vec<usize> = (0..d.n_rows()).collect();
    let results = vertical_partition(&d)
        .map_err(|e| e.to_string())?
        .iter()
        .map(|fs| gain_ratio(fs, &rows))
        .collect::<prf::Result<Vec<_>>>()
        .map_err(|e| e.to_string())?;
    let vi = variable_importance(&results);
    let out: Vec<_> = results
        .iter()
        .zip(&vi)
        .zip(&d.schema().features)
        .map(|((r, vi), f)| {
            json!({
                "feature": f.name,
                "entropy": r.entropy_target,
                "info_gain": r.info_gain,
                "split_info": r.split_info,
                "gain_ratio": r.gain_ratio,
                "importance": vi,
            })
        })
        .collect();
    Ok(serde_json::Value::Array(out).to_string())
}

/// The first `j` trees of a forest, exactly as a `j`-tree run would train them.
fn prefix(f: &Forest, j: usize) -> Result<Forest, String> {
    let dsi = build_dsi(f.n_rows, j, f.hyperparams.seed).map_err(|e| e.to_string())?;
    let mut p = f.clone();
    p.trees.truncate(j);
    p.hyperparams.k_trees = j;
    p.dsi_digest = dsi.digest();
    Ok(p)
}

fn rate(f: &Forest, d: &Dataset) -> Result<Option<f64>, String> {
    let dsi = build_dsi(f.n_rows, f.k(), f.hyperparams.seed).map_err(|e| e.to_string())?;
    match oob_error(f, d, &dsi) {
        Ok(o) => Ok(Some(o.rate)),
        Err(prf::Error::UndefinedOobError) => Ok(None),
        Err(e) => Err(e.to_string()),
    }
}

/// OOB error as trees are added, with OOB-accuracy weights and with equal
/// weights.
pub fn oob_curve_json(csv: &str, schema: &str, trees: usize, seed: u64) -> Result<String, String> {
    let d = load(csv, schema)?;
    let full = forest(&d, trees, seed)?;
    let mut sizes: Vec<usize> = [1, 2, 3, 5, 10, 15, 20, 30, 50, 75, 100, 150, 200, 300, 500]
        .into_iter()
        .filter(|&j| j < trees)
        .collect();
    sizes.push(trees);
    let mut points = Vec::new();
    for j in sizes {
        let weighted = prefix(&full, j)?;
        let mut equal = weighted.clone();
        equal.trees.iter_mut().for_each(|t| t.oob_accuracy = 1.0);
        points.push(json!({
            "trees": j,
            "weighted": rate(&weighted, &d)?,
            "unweighted": rate(&equal, &d)?,
        }));
    }
    Ok(serde_json::Value::Array(points).to_string())
}

/// Simulated makespan and speedup on 1..=`max_nodes` balanced nodes.
pub fn speedup_curve_json(
    csv: &str,
    schema: &str,
    trees: usize,
    seed: u64,
    max_nodes: usize,
    zero_comm: bool,
) -> Result<String, String> {
    let d = load(csv, schema)?;
    let f = forest(&d, trees, seed)?;
    let cost = if zero_comm { CostModel::zero_comm() } else { CostModel::default() };
    let counts: Vec<usize> = (1..=max_nodes.max(1)).collect();
    let fps = schema_footprints(d.schema(), d.n_rows() as u64);
    let rows = scaling_table(&forest_traces(&f), &fps, &cost, &counts).map_err(|e| e.to_string())?;
    let out: Vec<_> = counts
        .iter()
        .zip(rows)
        .map(|(n, r)| json!({ "nodes": n, "makespan": r.makespan, "speedup": r.speedup }))
        .collect();
    Ok(serde_json::Value::Array(out).to_string())
}

fn js(r: Result<String, String>) -> Result<String, JsValue> {
    r.map_err(|e| JsValue::from_str(&e))
}

#[wasm_bindgen]
pub fn gain_ratios(csv: &str, schema: &str) -> Result<String, JsValue> {
    js(gain_ratios_json(csv, schema))
}

#[wasm_bindgen]
pub fn oob_curve(csv: &str, schema: &str, trees: usize, seed: u32) -> Result<String, JsValue> {
    js(oob_curve_json(csv, schema, trees, u64::from(seed)))
}

#[wasm_bindgen]
pub fn speedup_curve(csv: &str, schema: &str, trees: usize, seed: u32, max_nodes: usize, zero_comm: bool) -> Result<String, JsValue> {
    js(speedup_curve_json(csv, schema, trees, u64::from(seed), max_nodes, zero_comm))
}
