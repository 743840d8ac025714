mod common;

use prf::dataset::{Column, Dataset, Schema, Target};
use prf::forest::{combine_regression, oob_error, train, train_with_dsi, weighted_vote, RegressionMode};
use prf::sampling::oob_indices;
use prf::tree::{Hyperparams, Prediction};
use proptest::prelude::*;

fn plain_majority(votes: &[u32], n_classes: usize) -> u32 {
    let mut counts = vec![0usize; n_classes];
    for &v in votes {
        counts[v as usize] += 1;
    }
    let best = *counts.iter().max().unwrap();
    counts.iter().position(|&c| c == best).unwrap() as u32
}

fn argmax_margin(t: &[f64]) -> f64 {
    let mut s = t.to_vec();
    s.sort_by(|a, b| b.total_cmp(a));
    if s.len() < 2 {
        f64::INFINITY
    } else {
        s[0] - s[1]
    }
}

proptest! {
    #[test]
    fn equal_weights_are_plain_majority(votes in prop::collection::vec(0u32..4, 1..40), w in 0.01f64..1.0) {
        let weighted: Vec<(u32, f64)> = votes.iter().map(|&v| (v, w)).collect();
        prop_assert_eq!(weighted_vote(&weighted, 4).0, plain_majority(&votes, 4));
    }

    #[test]
    fn power_of_two_scaling_keeps_the_winner(
        votes in prop::collection::vec((0u32..3, 0.0f64..1.0), 1..30),
        e in -10i32..10,
    ) {
        let c = 2f64.powi(e);
        let scaled: Vec<(u32, f64)> = votes.iter().map(|&(v, w)| (v, w * c)).collect();
        prop_assert_eq!(weighted_vote(&votes, 3).0, weighted_vote(&scaled, 3).0);
    }

    #[test]
    fn any_positive_scaling_keeps_a_clear_winner(
        votes in prop::collection::vec((0u32..3, 0.0f64..1.0), 1..30),
        c in 1e-3f64..1e3,
    ) {
        let (winner, tally) = weighted_vote(&votes, 3);
        prop_assume!(argmax_margin(&tally) > 1e-9);
        let scaled: Vec<(u32, f64)> = votes.iter().map(|&(v, w)| (v, w * c)).collect();
        prop_assert_eq!(winner, weighted_vote(&scaled, 3).0);
    }

    #[test]
    fn normalized_regression_is_a_weighted_mean(
        pairs in prop::collection::vec((-100.0f64..100.0, 0.01f64..1.0), 1..20),
    ) {
        let (hs, ws): (Vec<f64>, Vec<f64>) = pairs.into_iter().unzip();
        let v = combine_regression(&hs, &ws, RegressionMode::Normalized);
        let lo = hs.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = hs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        prop_assert!(v >= lo - 1e-9 && v <= hi + 1e-9);
        let lit = combine_regression(&hs, &ws, RegressionMode::PaperLiteral);
        let expect = hs.iter().zip(&ws).map(|(h, w)| h * w).sum::<f64>() / hs.len() as f64;
        prop_assert!((lit - expect).abs() < 1e-9);
    }
}

#[test]
fn dominant_tree_decides() {
    let d = common::random_classification(11, 200, 3, 1, 3, 0.3);
    let mut f = train(&d, &Hyperparams::default().with_trees(9).with_seed(4)).unwrap();
    for (i, t) in f.trees.iter_mut().enumerate() {
        t.oob_accuracy = if i == 3 { 1.0 } else { 0.0 };
    }
    let samples = d.samples();
    let report = f.predict(&samples, RegressionMode::Normalized).unwrap();
    for (s, out) in samples.iter().zip(&report.outputs) {
        assert_eq!(*out, f.trees[3].predict(s));
    }
}

#[test]
fn tallies_sum_to_total_weight() {
    let d = common::tennis();
    let f = train(&d, &Hyperparams::default().with_trees(15).with_seed(3)).unwrap();
    let total: f64 = f.weights().iter().sum();
    let report = f.predict(&d.samples(), RegressionMode::Normalized).unwrap();
    for t in &report.tallies {
        assert!((t.iter().sum::<f64>() - total).abs() < 1e-9);
    }
}

#[test]
fn oob_fraction_near_one_over_e() {
    let d = common::random_classification(2, 1000, 2, 1, 2, 0.1);
    let t = train_with_dsi(&d, &Hyperparams { max_depth: 1, ..Hyperparams::default().with_trees(50) }).unwrap();
    let mean = (0..50).map(|i| oob_indices(&t.dsi, i).unwrap().len()).sum::<usize>() as f64 / 50_000.0;
    assert!((0.35..0.39).contains(&mean), "mean OOB fraction {mean}");
    let e = oob_error(&t.forest, &d, &t.dsi).unwrap();
    assert!(e.rows_scored > 990);
    assert!((0.0..=1.0).contains(&e.rate));
}

#[test]
fn oob_error_rejects_a_foreign_table() {
    let d = common::tennis();
    let t = train_with_dsi(&d, &Hyperparams::default().with_trees(4)).unwrap();
    let other = prf::sampling::build_dsi(14, 4, 999).unwrap();
    assert!(oob_error(&t.forest, &d, &other).is_err());
}

fn regression_data() -> Dataset {
    let schema = Schema::from_json(
        r#"{"features":[{"name":"x","kind":"continuous"},{"name":"g","kind":"categorical","values":["a","b"]}],
            "target":{"name":"y","kind":"continuous"}}"#,
    )
    .unwrap();
    let xs: Vec<f64> = (0..80).map(|i| i as f64).collect();
    let gs: Vec<u32> = (0..80).map(|i| (i % 2) as u32).collect();
    let ys: Vec<f64> = xs.iter().zip(&gs).map(|(x, &g)| if *x < 40.0 { 1.0 } else { 5.0 } + g as f64).collect();
    Dataset::from_columns(schema, vec![Column::Continuous(xs), Column::Categorical(gs)], Target::Values(ys)).unwrap()
}

#[test]
fn regression_forest_fits_a_step() {
    let d = regression_data();
    let f = train(&d, &Hyperparams { m_selected: Some(2), ..Hyperparams::default().with_trees(20).with_seed(8) }).unwrap();
    assert!(f.trees.iter().all(|t| (0.0..=1.0).contains(&t.oob_accuracy)));
    let report = f.predict(&d.samples(), RegressionMode::Normalized).unwrap();
    let mse: f64 = report
        .outputs
        .iter()
        .enumerate()
        .map(|(i, p)| (p.value().unwrap() - d.target().get(i).as_number().unwrap()).powi(2))
        .sum::<f64>()
        / 80.0;
    assert!(mse < 0.1, "mse {mse}");
    // the literal mode shrinks toward zero by the mean weight
    let lit = f.predict(&d.samples(), RegressionMode::PaperLiteral).unwrap();
    let mean_w = f.weights().iter().sum::<f64>() / 20.0;
    for (a, b) in report.outputs.iter().zip(&lit.outputs) {
        assert!((a.value().unwrap() * mean_w - b.value().unwrap()).abs() < 1e-9);
    }
    assert!(matches!(report.outputs[0], Prediction::Value(_)));
}
