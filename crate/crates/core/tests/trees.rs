mod common;

use common::{check_tree, random_classification};
use prf::dataset::vertical_partition;
use prf::forest::train_with_dsi;
use prf::tree::{dimension_reduce, gain_ratio, variable_importance, Hyperparams};
use proptest::prelude::*;

fn params(k: usize, seed: u64) -> Hyperparams {
    Hyperparams::default().with_trees(k).with_seed(seed)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn splits_match_brute_force(
        seed in any::<u64>(),
        rows in 8usize..64,
        n_cat in 0usize..4,
        n_cont in 0usize..3,
    ) {
        prop_assume!(n_cat + n_cont >= 2);
        let d = random_classification(seed, rows, n_cat, n_cont, 3, 0.3);
        let h = Hyperparams { m_selected: Some(n_cat + n_cont), k_top: Some(1), ..params(3, seed) };
        let t = train_with_dsi(&d, &h).unwrap();
        for (i, tree) in t.forest.trees.iter().enumerate() {
            let checked = check_tree(&d, tree, &t.dsi.row(i), h.max_depth, 1);
            prop_assert!(checked.is_ok(), "{:?}", checked);
        }
    }

    #[test]
    fn stopping_rules_hold(seed in any::<u64>()) {
        let d = random_classification(seed, 60, 2, 2, 2, 0.4);
        let h = Hyperparams { max_depth: 2, min_leaf_size: 3, m_selected: Some(3), ..params(2, seed) };
        let t = train_with_dsi(&d, &h).unwrap();
        for (i, tree) in t.forest.trees.iter().enumerate() {
            prop_assert!(tree.depth() <= 2);
            let checked = check_tree(&d, tree, &t.dsi.row(i), 2, 3);
            prop_assert!(checked.is_ok(), "{:?}", checked);
        }
    }

    #[test]
    fn importance_sums_to_one(seed in any::<u64>(), rows in 5usize..80) {
        let d = random_classification(seed, rows, 3, 2, 2, 0.5);
        let f = train_with_dsi(&d, &params(4, seed)).unwrap().forest;
        for tree in &f.trees {
            let s: f64 = tree.importance.iter().sum();
            prop_assert!((s - 1.0).abs() < 1e-9, "sum {}", s);
            prop_assert!(tree.importance.iter().all(|&v| v >= 0.0));
        }
        prop_assert!((f.importance().iter().sum::<f64>() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn selection_keeps_top_features(seed in any::<u64>(), m in 1usize..6, k_top in 0usize..6) {
        prop_assume!(k_top <= m);
        let d = random_classification(seed, 40, 3, 3, 3, 0.2);
        let subsets = vertical_partition(&d).unwrap();
        let rows: Vec<usize> = (0..40).collect();
        let results: Vec<_> = subsets.iter().map(|fs| gain_ratio(fs, &rows).unwrap()).collect();
        let vi = variable_importance(&results);
        let h = Hyperparams { m_selected: Some(m), k_top: Some(k_top), ..params(1, seed) };
        let a = dimension_reduce(&results, &h, &mut common::rng(seed)).unwrap();
        let b = dimension_reduce(&results, &h, &mut common::rng(seed)).unwrap();
        prop_assert_eq!(&a, &b);
        prop_assert_eq!(a.len(), m);
        let mut uniq = a.clone();
        uniq.sort_unstable();
        uniq.dedup();
        prop_assert_eq!(uniq.len(), m);
        let mut ranked: Vec<usize> = (0..vi.len()).collect();
        ranked.sort_by(|&x, &y| vi[y].total_cmp(&vi[x]).then(x.cmp(&y)));
        for f in &ranked[..k_top] {
            prop_assert!(a.contains(f));
        }
    }
}

#[test]
fn full_selection_without_randomness_is_ranked_order() {
    let d = common::tennis();
    let subsets = vertical_partition(&d).unwrap();
    let rows: Vec<usize> = (0..14).collect();
    let results: Vec<_> = subsets.iter().map(|fs| gain_ratio(fs, &rows).unwrap()).collect();
    let h = Hyperparams { m_selected: Some(4), k_top: Some(4), ..Hyperparams::default() };
    // outlook, humidity, windy, temperature by gain ratio
    assert_eq!(dimension_reduce(&results, &h, &mut common::rng(1)).unwrap(), vec![0, 2, 3, 1]);
    assert_eq!(dimension_reduce(&results, &h, &mut common::rng(2)).unwrap(), vec![0, 2, 3, 1]);
}

#[test]
fn training_is_deterministic() {
    let d = random_classification(5, 120, 3, 2, 3, 0.2);
    let a = train_with_dsi(&d, &params(12, 99)).unwrap();
    let b = train_with_dsi(&d, &params(12, 99)).unwrap();
    assert_eq!(a.forest, b.forest);
    assert_eq!(a.dsi, b.dsi);
    let c = train_with_dsi(&d, &params(12, 100)).unwrap();
    assert_ne!(a.forest, c.forest);
}
