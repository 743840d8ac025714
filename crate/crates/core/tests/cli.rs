mod common;

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use common::data_dir;
use tempfile::TempDir;

fn prf(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_prf")).args(args).output().unwrap()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn tennis_paths() -> (PathBuf, PathBuf) {
    (data_dir().join("play_tennis.csv"), data_dir().join("play_tennis.schema.json"))
}

fn train_into(out: &Path, seed: &str) -> Output {
    let (data, schema) = tennis_paths();
    prf(&["train", "--data", s(&data), "--schema", s(&schema), "--trees", "25", "--seed", seed, "--out", s(out)])
}

/// Data rows of a CSV output, without the provenance comment.
fn csv_rows(path: &Path) -> Vec<csv::StringRecord> {
    let text = std::fs::read_to_string(path).unwrap();
    let first = text.lines().next().unwrap();
    assert!(first.starts_with("# config_digest="), "missing stamp: {first}");
    let body: String = text.lines().skip(1).map(|l| format!("{l}\n")).collect();
    csv::Reader::from_reader(body.as_bytes()).records().map(Result::unwrap).collect()
}

#[test]
fn train_writes_stamped_model_and_metrics() {
    let dir = TempDir::new().unwrap();
    let out = train_into(dir.path(), "7");
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let model: serde_json::Value = serde_json::from_slice(&std::fs::read(dir.path().join("model.json")).unwrap()).unwrap();
    let metrics: serde_json::Value = serde_json::from_slice(&std::fs::read(dir.path().join("metrics.json")).unwrap()).unwrap();
    assert_eq!(model["seed"], 7);
    assert_eq!(model["config_digest"], metrics["config_digest"]);
    assert_eq!(metrics["trees"].as_array().unwrap().len(), 25);
    let vi: f64 = metrics["importance"].as_array().unwrap().iter().map(|r| r["vi"].as_f64().unwrap()).sum();
    assert!((vi - 1.0).abs() < 1e-9);
}

#[test]
fn training_is_byte_reproducible_and_seed_sensitive() {
    let (a, b, c) = (TempDir::new().unwrap(), TempDir::new().unwrap(), TempDir::new().unwrap());
    train_into(a.path(), "3");
    train_into(b.path(), "3");
    train_into(c.path(), "4");
    let read = |d: &TempDir| std::fs::read(d.path().join("model.json")).unwrap();
    assert_eq!(read(&a), read(&b));
    assert_ne!(read(&a), read(&c));
}

#[test]
fn missing_input_exits_2_and_names_the_path() {
    let dir = TempDir::new().unwrap();
    let (data, _) = tennis_paths();
    let missing = dir.path().join("nope.schema.json");
    let out = prf(&["train", "--data", s(&data), "--schema", s(&missing), "--out", s(dir.path())]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("nope.schema.json"));
}

#[test]
fn bad_flags_exit_1() {
    assert_eq!(prf(&["train", "--bogus"]).status.code(), Some(1));
}

#[test]
fn predict_recovers_training_labels_and_tallies_sum_to_weight() {
    let dir = TempDir::new().unwrap();
    train_into(dir.path(), "1");
    let (data, schema) = tennis_paths();
    let model = dir.path().join("model.json");
    let out = prf(&["predict", "--model", s(&model), "--data", s(&data), "--schema", s(&schema), "--out", s(dir.path())]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));

    let forest: serde_json::Value = serde_json::from_slice(&std::fs::read(&model).unwrap()).unwrap();
    let weight: f64 = forest["trees"].as_array().unwrap().iter().map(|t| t["oob_accuracy"].as_f64().unwrap()).sum();
    let truth: Vec<String> = csv::Reader::from_path(&data).unwrap().records().map(|r| r.unwrap()[4].to_string()).collect();
    let rows = csv_rows(&dir.path().join("predictions.csv"));
    assert_eq!(rows.len(), truth.len());
    let hits = rows.iter().zip(&truth).filter(|(r, t)| &r[1] == t.as_str()).count();
    assert!(hits * 10 >= truth.len() * 8, "only {hits} of {} training rows recovered", truth.len());
    for r in &rows {
        let tally: f64 = (2..r.len()).map(|i| r[i].parse::<f64>().unwrap()).sum();
        if weight > 0.0 {
            assert!((tally - weight).abs() < 1e-9, "tally {tally} vs {weight}");
        }
    }
}

#[test]
fn predict_on_empty_input_writes_header_only() {
    let dir = TempDir::new().unwrap();
    train_into(dir.path(), "1");
    let empty = dir.path().join("empty.csv");
    std::fs::write(&empty, "").unwrap();
    let out = prf(&["predict", "--model", s(&dir.path().join("model.json")), "--data", s(&empty), "--out", s(dir.path())]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(csv_rows(&dir.path().join("predictions.csv")).is_empty());
}

#[test]
fn predict_rejects_foreign_schema_with_exit_3() {
    let dir = TempDir::new().unwrap();
    train_into(dir.path(), "1");
    let (data, _) = tennis_paths();
    let other = dir.path().join("other.schema.json");
    std::fs::write(
        &other,
        r#"{"features": [{"name": "x", "kind": "continuous"}], "target": {"name": "y", "kind": "categorical", "classes": ["a", "b"]}}"#,
    )
    .unwrap();
    let out = prf(&["predict", "--model", s(&dir.path().join("model.json")), "--data", s(&data), "--schema", s(&other), "--out", s(dir.path())]);
    assert_eq!(out.status.code(), Some(3), "{}", String::from_utf8_lossy(&out.stderr));

    let shuffled = dir.path().join("shuffled.csv");
    std::fs::write(&shuffled, "temperature,outlook,humidity,windy\nhot,sunny,high,false\n").unwrap();
    let out = prf(&["predict", "--model", s(&dir.path().join("model.json")), "--data", s(&shuffled), "--out", s(dir.path())]);
    assert_eq!(out.status.code(), Some(3), "{}", String::from_utf8_lossy(&out.stderr));
}

fn cluster_file(dir: &Path, nodes: usize, cap: u64) -> PathBuf {
    let list: Vec<String> = (0..nodes).map(|i| format!(r#"{{"node_id": {i}, "capacity_bytes": {cap}}}"#)).collect();
    let path = dir.join("cluster.json");
    std::fs::write(&path, format!(r#"{{"nodes": [{}]}}"#, list.join(","))).unwrap();
    path
}

#[test]
fn simulate_writes_consistent_artifacts() {
    let dir = TempDir::new().unwrap();
    train_into(dir.path(), "2");
    let cluster = cluster_file(dir.path(), 3, 400);
    let out = prf(&["simulate", "--model", s(&dir.path().join("model.json")), "--cluster", s(&cluster), "--out", s(dir.path())]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));

    let speed = csv_rows(&dir.path().join("speedup.csv"));
    assert_eq!(speed.len(), 3);
    assert_eq!(&speed[0][0], "1");
    assert_eq!(speed[0][3].parse::<f64>().unwrap(), 1.0);

    let ledger: serde_json::Value = serde_json::from_slice(&std::fs::read(dir.path().join("ledger.json")).unwrap()).unwrap();
    assert_eq!(ledger["ledger"]["training_traffic"]["feature_data"], 0);
    let all_whole = ledger["allocation"].as_array().unwrap().iter().all(|e| e["scenario"] != "a");
    if all_whole {
        assert_eq!(ledger["ledger"]["training_traffic"]["partition_stats"], 0);
    }

    let vol = csv_rows(&dir.path().join("volume.csv"));
    let cells = |strategy: &str, k: &str| -> u64 {
        vol.iter().find(|r| &r[0] == strategy && &r[3] == k).unwrap()[6].parse().unwrap()
    };
    // 14 rows, 5 columns
    assert_eq!(cells("horizontal-copy", "10"), 14 * 5 * 10);
    assert_eq!(cells("horizontal-copy", "100"), 14 * 5 * 100);
    assert_eq!(cells("prf-multiplex", "10"), 14 * 2 * 4 + 10 * 14);
    assert_eq!(cells("prf-multiplex", "100"), 14 * 2 * 4 + 100 * 14);

    let text = std::fs::read_to_string(dir.path().join("schedule.jsonl")).unwrap();
    let header: serde_json::Value = serde_json::from_str(text.lines().next().unwrap()).unwrap();
    assert_eq!(header["config_digest"], ledger["config_digest"]);
}

#[test]
fn undersized_cluster_exits_4() {
    let dir = TempDir::new().unwrap();
    train_into(dir.path(), "2");
    let cluster = cluster_file(dir.path(), 1, 10);
    let out = prf(&["simulate", "--model", s(&dir.path().join("model.json")), "--cluster", s(&cluster), "--out", s(dir.path())]);
    assert_eq!(out.status.code(), Some(4));
}

#[test]
fn report_includes_oob_when_data_is_given() {
    let dir = TempDir::new().unwrap();
    train_into(dir.path(), "5");
    let (data, _) = tennis_paths();
    let out = prf(&["report", "--model", s(&dir.path().join("model.json")), "--data", s(&data), "--out", s(dir.path())]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let report: serde_json::Value = serde_json::from_slice(&std::fs::read(dir.path().join("report.json")).unwrap()).unwrap();
    let metrics: serde_json::Value = serde_json::from_slice(&std::fs::read(dir.path().join("metrics.json")).unwrap()).unwrap();
    assert_eq!(report["oob_error"], metrics["oob_error"]);
}
