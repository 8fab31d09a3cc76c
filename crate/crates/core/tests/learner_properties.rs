mod common;

use phishguard::learners::{
    label_for, train_gbt_with_history, train_tree, GbtParams, LinearModel, ModelKind, Scorer, Standardizer,
    TrainConfig, TrainedModel, TreeParams,
};
use proptest::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn scorers_stay_in_unit_interval_and_threshold_at_half(seed in 0u64..500) {
        let ds = common::separable(80, 5, seed);
        let cfg = TrainConfig { seed, ..TrainConfig::default() };
        for kind in [ModelKind::Logistic, ModelKind::Svm, ModelKind::Tree, ModelKind::Gbt] {
            let m = kind.train(&ds, &cfg).unwrap();
            for s in &ds.samples {
                let p = m.predict_proba(&s.features).unwrap();
                prop_assert!((0.0..=1.0).contains(&p));
                prop_assert_eq!(m.predict_label(&s.features).unwrap(), u8::from(p >= 0.5));
            }
        }
    }

    #[test]
    fn best_split_tree_ignores_row_order(seed in 0u64..500, rotate in 1usize..79) {
        let ds = common::separable(80, 4, seed);
        let mut order: Vec<usize> = (0..ds.len()).collect();
        order.rotate_left(rotate);
        order.reverse();
        let shuffled = ds.subset(&order);
        let params = TreeParams::default();
        prop_assert_eq!(train_tree(&ds, &params, 3).unwrap(), train_tree(&shuffled, &params, 3).unwrap());
    }

    #[test]
    fn standardized_columns_have_zero_mean_unit_sd(
        rows in prop::collection::vec(prop::collection::vec(-1e3f64..1e3, 4), 2..50),
        constant in -5.0f64..5.0,
    ) {
        let rows: Vec<Vec<f64>> = rows.into_iter().map(|mut r| { r[3] = constant; r }).collect();
        let refs: Vec<&[f64]> = rows.iter().map(Vec::as_slice).collect();
        let s = Standardizer::fit(&refs);
        let t = s.transform_all(&refs);
        let n = rows.len() as f64;
        for j in 0..4 {
            let col: Vec<f64> = t.iter().map(|r| r[j]).collect();
            let mean = col.iter().sum::<f64>() / n;
            let sd = (col.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n).sqrt();
            if s.is_constant(j) {
                prop_assert!(col.iter().all(|&v| v == 0.0));
            } else {
                prop_assert!(mean.abs() < 1e-9, "mean {mean}");
                prop_assert!((sd - 1.0).abs() < 1e-9, "sd {sd}");
            }
        }
    }

    #[test]
    fn argmax_invariance_under_rescaling(
        w in prop::collection::vec(-3.0f64..3.0, 5),
        b in -1.0f64..1.0,
        x in prop::collection::vec(-2.0f64..2.0, 5),
        c in 0.01f64..100.0,
    ) {
        let m = TrainedModel::Linear(LinearModel::new(w.clone(), b));
        let scaled = TrainedModel::Linear(LinearModel::new(w.iter().map(|v| v / c).collect(), b));
        let xs: Vec<f64> = x.iter().map(|v| v * c).collect();
        let z: f64 = w.iter().zip(&x).map(|(a, v)| a * v).sum::<f64>() + b;
        // Rounding can only matter when the logit sits on the boundary.
        prop_assume!(z.abs() > 1e-9);
        prop_assert_eq!(m.predict_label(&x).unwrap(), scaled.predict_label(&xs).unwrap());
    }
}

#[test]
fn shrunken_boosting_does_not_beat_unshrunken_training_loss() {
    for seed in 0..5 {
        let ds = common::separable(120, 5, seed);
        let full = GbtParams { n_rounds: 30, learning_rate: 1.0, max_depth: 2, min_samples_leaf: 1 };
        let shrunk = GbtParams { learning_rate: 0.02, ..full.clone() };
        let (_, h_full) = train_gbt_with_history(&ds, &full).unwrap();
        let (m, h_shrunk) = train_gbt_with_history(&ds, &shrunk).unwrap();
        for pair in h_shrunk.windows(2) {
            assert!(pair[1] <= pair[0] + 1e-12, "loss rose: {pair:?}");
        }
        assert!(h_shrunk.last().unwrap() >= h_full.last().unwrap());
        let acc = ds.samples.iter().filter(|s| label_for(m.proba(&s.features)) == s.label).count();
        assert!(acc as f64 / ds.len() as f64 > 0.5);
        assert!(Scorer::score(&TrainedModel::Ensemble(m), &ds.samples[0].features).is_finite());
    }
}
