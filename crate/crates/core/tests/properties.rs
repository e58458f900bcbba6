use proptest::prelude::*;

use fatiguelab::models::{
    classify_block, fit_standardizer, vote_blocks, ModelConfig, ModelKind, TrainedModel,
};
use fatiguelab::signals::WindowPlan;

proptest! {
    #[test]
    fn time_windows_tile_the_block(duration in 1.0f64..600.0, window in 0.5f64..60.0, frac in 0.05f64..=1.0) {
        let stride = window * frac;
        let plan = WindowPlan::with_stride(window, stride).unwrap();
        match plan.time_ranges(duration) {
            Err(_) => prop_assert!(duration < window),
            Ok(w) => {
                // oracle: count starts by repeated addition
                let mut count = 0usize;
                while count as f64 * stride + window <= duration + 1e-9 {
                    count += 1;
                }
                prop_assert_eq!(w.len(), count);
                for (i, (a, b)) in w.iter().enumerate() {
                    prop_assert!((a - i as f64 * stride).abs() < 1e-9);
                    prop_assert!((b - a - window).abs() < 1e-9);
                    prop_assert!(*b <= duration + 1e-9);
                }
            }
        }
    }

    #[test]
    fn block_vote_matches_counts(labels in proptest::collection::vec(any::<bool>(), 1..40)) {
        let pos = labels.iter().filter(|l| **l).count();
        prop_assert_eq!(classify_block(&labels).unwrap(), 2 * pos >= labels.len());
        let voted = vote_blocks(labels.iter().map(|&p| ("b", "s", true, p))).unwrap();
        prop_assert_eq!(voted.len(), 1);
        prop_assert_eq!(voted[0].positive_slices, pos);
        prop_assert_eq!(voted[0].predicted, 2 * pos >= labels.len());
    }

    #[test]
    fn refitting_standardized_data_is_identity(rows in proptest::collection::vec(proptest::collection::vec(-1e3f64..1e3, 3), 3..40)) {
        let p = fit_standardizer(&rows).unwrap();
        let z = p.transform(&rows).unwrap();
        let q = fit_standardizer(&z).unwrap();
        for j in 0..3 {
            prop_assert!(q.mean[j].abs() < 1e-9);
            if !p.zero_variance[j] {
                prop_assert!((q.std[j] - 1.0).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn svm_and_logreg_are_seed_deterministic(seed in 0u64..1000) {
        let x: Vec<Vec<f64>> = (0..30).map(|i| vec![i as f64, (i * 7 % 11) as f64]).collect();
        let y: Vec<bool> = (0..30).map(|i| i % 3 == 0).collect();
        let names = vec!["a".to_string(), "b".to_string()];
        for kind in [ModelKind::Logreg, ModelKind::Svm] {
            let cfg = ModelConfig::new(kind, seed);
            let a = TrainedModel::fit_features(&names, &x, &y, &cfg).unwrap();
            let b = TrainedModel::fit_features(&names, &x, &y, &cfg).unwrap();
            prop_assert_eq!(a, b);
        }
    }
}
