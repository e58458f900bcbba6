use std::collections::BTreeSet;

use fatiguelab::dataset::{label, make_examples, ExampleMode, LabelPolicy, Modality, Target};
use fatiguelab::eval::{
    default_plans, predict_slices, predictions_csv, render_text, run_experiment, ExperimentConfig,
    ExperimentReport,
};
use fatiguelab::models::{ModelConfig, ModelKind, TrainedModel};
use fatiguelab::signals::WindowPlan;
use fatiguelab::synth::{gen_study, Study, StudyConfig};

fn small_study(seed: u64) -> Study {
    gen_study(&StudyConfig {
        n_subjects: 8,
        block_duration_s: 20.0,
        seed,
        ..StudyConfig::default()
    })
    .unwrap()
}

/// The full four-model grid with hyperparameters shrunk for test speed.
fn quick_grid(target: Target, modality: Modality, seed: u64) -> ExperimentConfig {
    let mut cfg = ExperimentConfig::grid(target, modality, seed);
    for m in &mut cfg.models {
        m.logreg.epochs = 100;
        m.svm.epochs = 10;
        m.forest.n_trees = 10;
        m.lstm.hidden_size = 4;
        m.lstm.epochs = 2;
    }
    cfg
}

#[test]
fn eeg_grid_has_sixteen_cells_and_consistent_metrics() {
    let study = small_study(3);
    let report = run_experiment(&study.blocks, &quick_grid(Target::Cf, Modality::Eeg, 3)).unwrap();
    assert_eq!(report.cells.len(), 16);
    let shape: BTreeSet<(ModelKind, String)> = report
        .cells
        .iter()
        .map(|c| (c.model, c.window.clone()))
        .collect();
    assert_eq!(shape.len(), 16);
    assert_eq!(report.best.len(), 4);

    let split = &report.metadata.split;
    let test_blocks = study
        .blocks
        .iter()
        .filter(|b| split.test.contains(&b.subject_id))
        .count();
    for c in &report.cells {
        // block metrics are computed on blocks, slice metrics on slices
        assert_eq!(c.test.confusion.total(), test_blocks);
        assert_eq!(c.test_blocks.len(), test_blocks);
        let slices: usize = c.test_blocks.iter().map(|b| b.slices).sum();
        assert_eq!(c.test_slices.confusion.total(), slices);
        let k = c.test.confusion;
        assert_eq!(c.test.accuracy, (k.tp + k.tn) as f64 / k.total() as f64);
        assert!((0.0..=1.0).contains(&c.test.recall));
        assert_eq!(c.folds.len(), 5);
        let mean = c.folds.iter().map(|f| f.metrics.recall).sum::<f64>() / 5.0;
        assert!((c.mean_cv_recall - mean).abs() < 1e-15);
        for f in &c.folds {
            assert!(f.subjects.iter().all(|s| split.train.contains(s)));
        }
    }
    for b in &report.best {
        let cands: Vec<_> = report.cells.iter().filter(|c| c.model == b.model).collect();
        let top = cands
            .iter()
            .map(|c| c.mean_cv_accuracy)
            .fold(f64::MIN, f64::max);
        assert_eq!(b.mean_cv_accuracy, top);
    }
    let text = render_text(&report);
    for needle in [
        "Log Reg.",
        "SVM",
        "RF",
        "LSTM",
        "5s",
        "10s",
        "20s",
        "full",
        "Avg. Recall",
        "Published reference",
    ] {
        assert!(text.contains(needle), "{needle} missing from\n{text}");
    }
    assert_eq!(
        predictions_csv(&report).lines().count(),
        1 + 16 * test_blocks
    );
}

#[test]
fn reruns_are_identical_and_reports_round_trip() {
    let study = small_study(5);
    let mut cfg = quick_grid(Target::Pf, Modality::Physio, 5);
    cfg.plans = vec![WindowPlan::windowed(10.0), WindowPlan::FullBlock];
    let a = run_experiment(&study.blocks, &cfg).unwrap();
    let b = run_experiment(&study.blocks, &cfg).unwrap();
    assert_eq!(a.digest().unwrap(), b.digest().unwrap());
    let back = ExperimentReport::from_json(&a.to_json().unwrap()).unwrap();
    assert_eq!(back, a);
    assert_eq!(back.to_json().unwrap(), a.to_json().unwrap());

    let mut other = cfg.clone();
    other.seed = 6;
    assert_ne!(other.digest().unwrap(), cfg.digest().unwrap());
}

#[test]
fn combined_modality_models_record_the_pca_clamp() {
    let study = small_study(4);
    let mut cfg = quick_grid(Target::Cf, Modality::All, 4);
    cfg.plans = vec![WindowPlan::windowed(10.0)];
    cfg.models.retain(|m| m.kind == ModelKind::Logreg);
    assert_eq!(cfg.models[0].pca_components, Some(189));
    let report = run_experiment(&study.blocks, &cfg).unwrap();
    assert!(
        report.cells[0].warnings.iter().any(|w| w.contains("pca")),
        "{:?}",
        report.cells[0].warnings
    );
}

#[test]
fn forest_oob_accuracy_tracks_held_out_accuracy() {
    let study = gen_study(&StudyConfig {
        n_subjects: 12,
        block_duration_s: 30.0,
        seed: 9,
        ..StudyConfig::default()
    })
    .unwrap();
    let (train, test): (Vec<_>, Vec<_>) = study
        .blocks
        .iter()
        .cloned()
        .partition(|b| b.subject_id.as_str() < "S10");
    let mode = ExampleMode::Feature;
    let plan = WindowPlan::windowed(10.0);
    let train_set = make_examples(
        &label(&train, &LabelPolicy::physical()),
        &plan,
        mode,
        Modality::Physio,
    )
    .unwrap();
    let test_set = make_examples(
        &label(&test, &LabelPolicy::physical()),
        &plan,
        mode,
        Modality::Physio,
    )
    .unwrap();
    let rows: Vec<Vec<f64>> = train_set
        .examples
        .iter()
        .map(|e| e.features().unwrap().to_vec())
        .collect();
    let y: Vec<bool> = train_set.examples.iter().map(|e| e.label).collect();
    let model = TrainedModel::fit_features(
        &train_set.columns,
        &rows,
        &y,
        &ModelConfig::new(ModelKind::Rf, 2),
    )
    .unwrap();
    let pred = predict_slices(&model, &test_set).unwrap();
    let held_out = pred
        .iter()
        .zip(&test_set.examples)
        .filter(|(p, e)| **p == e.label)
        .count() as f64
        / pred.len() as f64;
    let fatiguelab::models::ModelParams::Rf(rf) = &model.params else {
        panic!()
    };
    let oob = rf.oob_accuracy.unwrap();
    assert!(
        (oob - held_out).abs() <= 0.1,
        "oob {oob}, held-out {held_out}"
    );
}

#[test]
fn windows_longer_than_blocks_fail_with_context() {
    let study = small_study(1);
    let mut cfg = quick_grid(Target::Cf, Modality::Physio, 1);
    cfg.plans = vec![WindowPlan::windowed(30.0)];
    let err = run_experiment(&study.blocks, &cfg).unwrap_err().to_string();
    assert!(err.contains("30s"), "{err}");
    assert_eq!(default_plans().len(), 4);
}
