use prf_wasm_demo::{gain_ratios_json, oob_curve_json, speedup_curve_json};
use serde_json::Value;

const CSV: &str = include_str!("../../core/tests/data/play_tennis.csv");
const SCHEMA: &str = include_str!("../../core/tests/data/play_tennis.schema.json");

fn parse(s: String) -> Vec<Value> {
    serde_json::from_str::<Value>(&s).unwrap().as_array().unwrap().clone()
}

#[test]
fn gain_ratios_cover_every_feature() {
    let rows = parse(gain_ratios_json(CSV, SCHEMA).unwrap());
    assert_eq!(rows.len(), 4);
    assert_eq!(rows[0]["feature"], "outlook");
    assert!((rows[0]["info_gain"].as_f64().unwrap() - 0.24675).abs() < 1e-5);
    let vi: f64 = rows.iter().map(|r| r["importance"].as_f64().unwrap()).sum();
    assert!((vi - 1.0).abs() < 1e-9);
}

#[test]
fn oob_curve_ends_at_the_full_forest() {
    let points = parse(oob_curve_json(CSV, SCHEMA, 40, 3).unwrap());
    assert_eq!(points.first().unwrap()["trees"], 1);
    assert_eq!(points.last().unwrap()["trees"], 40);
    let sizes: Vec<u64> = points.iter().map(|p| p["trees"].as_u64().unwrap()).collect();
    assert!(sizes.windows(2).all(|w| w[0] < w[1]));
}

#[test]
fn prefix_matches_a_smaller_run() {
    // the 10-tree point of a 40-tree curve equals the last point of a 10-tree curve
    let long = parse(oob_curve_json(CSV, SCHEMA, 40, 3).unwrap());
    let short = parse(oob_curve_json(CSV, SCHEMA, 10, 3).unwrap());
    let at10 = long.iter().find(|p| p["trees"] == 10).unwrap();
    assert_eq!(at10, short.last().unwrap());
}

#[test]
fn speedup_starts_at_one_and_stays_below_linear() {
    let rows = parse(speedup_curve_json(CSV, SCHEMA, 10, 1, 4, false).unwrap());
    assert_eq!(rows.len(), 4);
    assert_eq!(rows[0]["speedup"].as_f64().unwrap(), 1.0);
    for r in &rows {
        assert!(r["speedup"].as_f64().unwrap() <= r["nodes"].as_f64().unwrap() + 1e-9);
    }
}

#[test]
fn bad_input_is_an_error() {
    assert!(gain_ratios_json("a,b\n1,2\n", SCHEMA).is_err());
    assert!(oob_curve_json(CSV, "{", 5, 1).is_err());
}
