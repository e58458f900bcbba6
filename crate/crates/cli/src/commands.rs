//! Subcommand bodies. Every output file is written atomically.

use std::collections::BTreeSet;
use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;

use fatiguelab::dataset::{
    check_alignment, ingest, label, make_examples, ExampleMode, ExamplePayload, ExampleSet,
    LabelPolicy, Modality, RecordingBlock, SequenceConfig, SplitPlan, Target,
};
use fatiguelab::eval::{
    default_model, fit_examples, predictions_csv, render_text, run_experiment, split_labeled,
    summarize_vas, ExperimentConfig, ExperimentReport,
};
use fatiguelab::features::FEATURE_REGISTRY_VERSION;
use fatiguelab::models::{ModelConfig, ModelKind};
use fatiguelab::signals::WindowPlan;
use fatiguelab::synth::{gen_study, write_atomic, write_study, EffectSizes, StudyConfig};

use crate::config::RunConfig;
use crate::CliError;

fn io_error(path: &Path, e: std::io::Error) -> CliError {
    CliError::Core(fatiguelab::Error::Io {
        path: path.to_path_buf(),
        source: e,
    })
}

fn create_dir(dir: &Path) -> Result<(), CliError> {
    fs::create_dir_all(dir).map_err(|e| io_error(dir, e))
}

fn write(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    write_atomic(path, bytes)?;
    Ok(())
}

fn to_json<T: Serialize>(value: &T) -> Result<String, CliError> {
    serde_json::to_string_pretty(value).map_err(|e| CliError::Core(e.into()))
}

pub fn synth(cfg: &RunConfig) -> Result<(), CliError> {
    let defaults = StudyConfig::default();
    let effect = EffectSizes {
        cf: cfg.effect_cf.unwrap_or(defaults.effect.cf),
        pf: cfg.effect_pf.unwrap_or(defaults.effect.pf),
    };
    let study_cfg = StudyConfig {
        n_subjects: cfg.subjects.unwrap_or(defaults.n_subjects),
        block_duration_s: cfg.block_seconds.unwrap_or(defaults.block_duration_s),
        effect,
        seed: cfg.seed(),
        ..defaults
    };
    if study_cfg.n_subjects == 0 {
        return Err(CliError::Usage("--subjects must be at least 1".into()));
    }
    if !(study_cfg.block_duration_s.is_finite() && study_cfg.block_duration_s > 0.0) {
        return Err(CliError::Usage("--block-seconds must be positive".into()));
    }
    let out = cfg.out()?;
    let study = gen_study(&study_cfg)?;
    let manifest = write_study(&study, out)?;
    write(&out.join("synth.json"), to_json(&study_cfg)?.as_bytes())?;
    println!(
        "wrote {} blocks for {} subjects: {}",
        study.blocks.len(),
        study_cfg.n_subjects,
        manifest.display()
    );
    Ok(())
}

pub fn ingest_check(cfg: &RunConfig) -> Result<(), CliError> {
    let blocks = ingest(cfg.manifest()?)?;
    let subjects: BTreeSet<&str> = blocks.iter().map(|b| b.subject_id.as_str()).collect();
    println!("subjects: {}", subjects.len());
    println!("blocks: {}", blocks.len());

    let mut channels: BTreeSet<String> = BTreeSet::new();
    for block in &blocks {
        check_alignment(block)?;
        for (ch, sig) in &block.signals {
            channels.insert(format!("{ch} @ {} Hz", sig.sampling_rate_hz()));
        }
    }
    println!(
        "channels: {}",
        channels.into_iter().collect::<Vec<_>>().join(", ")
    );
    let (lo, hi) = blocks
        .iter()
        .map(RecordingBlock::duration_s)
        .fold((f64::INFINITY, 0.0_f64), |(lo, hi), d| {
            (lo.min(d), hi.max(d))
        });
    println!("block duration: {lo:.2} .. {hi:.2} s");
    println!("alignment: ok");
    for target in [Target::Cf, Target::Pf] {
        let labeled = label(&blocks, &LabelPolicy::for_target(target));
        let positive = labeled.iter().filter(|l| l.label).count();
        println!(
            "{target} labels: {} blocks, {positive} positive, {} negative",
            labeled.len(),
            labeled.len() - positive
        );
    }
    println!();
    print!("{}", summarize_vas(&blocks).render());
    Ok(())
}

fn parse_mode(cfg: &RunConfig) -> Result<ExampleMode, CliError> {
    let sequence = SequenceConfig {
        step_hz: cfg
            .sequence_step_hz
            .unwrap_or(SequenceConfig::default().step_hz),
    };
    match cfg.mode.as_deref().unwrap_or("feature") {
        "feature" => Ok(ExampleMode::Feature),
        "sequence" => Ok(ExampleMode::Sequence(sequence)),
        other => Err(CliError::Usage(format!(
            "--mode must be feature or sequence, got {other:?}"
        ))),
    }
}

fn single_window(cfg: &RunConfig) -> Result<WindowPlan, CliError> {
    let plans = cfg.windows("10")?;
    match plans.as_slice() {
        [plan] => Ok(*plan),
        _ => Err(CliError::Usage(
            "--window takes a single plan for this command".into(),
        )),
    }
}

#[derive(Serialize)]
struct ExamplesMeta<'a> {
    target: Target,
    modality: Modality,
    mode: ExampleMode,
    plan: WindowPlan,
    window: String,
    feature_registry_version: u32,
    examples: usize,
    columns: &'a [String],
}

/// One row per feature example, or one row per time step of each sequence.
fn examples_csv(set: &ExampleSet) -> Result<Vec<u8>, CliError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let csv_err = |e: csv::Error| CliError::Core(fatiguelab::Error::Data(format!("csv: {e}")));
    let mut header = vec![
        "subject_id".to_string(),
        "block_key".into(),
        "slice_index".into(),
        "label".into(),
    ];
    if matches!(set.mode, ExampleMode::Sequence(_)) {
        header.push("step".into());
    }
    header.extend(set.columns.iter().cloned());
    w.write_record(&header).map_err(csv_err)?;
    for e in &set.examples {
        let lead = [
            e.subject_id.clone(),
            e.block_key.clone(),
            e.slice_index.to_string(),
            u8::from(e.label).to_string(),
        ];
        match &e.payload {
            ExamplePayload::Features(v) => {
                let row = lead.iter().cloned().chain(v.iter().map(f64::to_string));
                w.write_record(row).map_err(csv_err)?;
            }
            ExamplePayload::Sequence(steps) => {
                for (t, step) in steps.iter().enumerate() {
                    let row = lead
                        .iter()
                        .cloned()
                        .chain(std::iter::once(t.to_string()))
                        .chain(step.iter().map(f64::to_string));
                    w.write_record(row).map_err(csv_err)?;
                }
            }
        }
    }
    w.into_inner()
        .map_err(|e| CliError::Core(fatiguelab::Error::Data(format!("csv: {e}"))))
}

pub fn features(cfg: &RunConfig) -> Result<(), CliError> {
    let target = cfg.target()?;
    let modality = cfg.modality()?;
    let plan = single_window(cfg)?;
    let mode = parse_mode(cfg)?;
    let out = cfg.out()?;
    let blocks = ingest(cfg.manifest()?)?;
    let labeled = label(&blocks, &LabelPolicy::for_target(target));
    let set = make_examples(&labeled, &plan, mode, modality)?;
    create_dir(out)?;
    write(&out.join("examples.csv"), &examples_csv(&set)?)?;
    let meta = ExamplesMeta {
        target,
        modality,
        mode,
        plan,
        window: plan.label(),
        feature_registry_version: FEATURE_REGISTRY_VERSION,
        examples: set.len(),
        columns: &set.columns,
    };
    write(&out.join("examples.json"), to_json(&meta)?.as_bytes())?;
    println!(
        "wrote {} examples x {} columns to {}",
        set.len(),
        set.columns.len(),
        out.join("examples.csv").display()
    );
    Ok(())
}

/// Grid defaults for `kind`, overridden by configured hyperparameters.
fn model_config(
    cfg: &RunConfig,
    kind: ModelKind,
    modality: Modality,
) -> Result<ModelConfig, CliError> {
    let mut m = default_model(kind, modality, cfg.seed());
    if let Some(pca) = cfg.pca {
        if kind.is_sequence() && pca > 0 {
            return Err(CliError::Usage(format!(
                "--pca cannot be combined with the {kind} sequence model"
            )));
        }
        m.pca_components = (pca > 0).then_some(pca);
    }
    if let Some(w) = cfg.class_weight {
        m.class_weight = w;
    }
    if let Some(n) = cfg.rf_trees {
        m.forest.n_trees = n;
    }
    if let Some(h) = cfg.lstm_hidden {
        m.lstm.hidden_size = h;
    }
    if let Some(e) = cfg.lstm_epochs {
        m.lstm.epochs = e;
    }
    Ok(m)
}

fn sequence_config(cfg: &RunConfig) -> SequenceConfig {
    SequenceConfig {
        step_hz: cfg
            .sequence_step_hz
            .unwrap_or(SequenceConfig::default().step_hz),
    }
}

#[derive(Serialize)]
struct TrainSummary<'a> {
    target: Target,
    modality: Modality,
    plan: WindowPlan,
    window: String,
    model: &'a ModelConfig,
    split: &'a SplitPlan,
    trained_subjects: &'a [String],
    examples: usize,
    positive_examples: usize,
    warnings: &'a [String],
}

pub fn train(cfg: &RunConfig, all_subjects: bool) -> Result<(), CliError> {
    let target = cfg.target()?;
    let modality = cfg.modality()?;
    let plan = single_window(cfg)?;
    let kind = match cfg.models("rf")?.as_slice() {
        [k] => *k,
        _ => {
            return Err(CliError::Usage(
                "--model takes a single model for train".into(),
            ))
        }
    };
    let model = model_config(cfg, kind, modality)?;
    let out = cfg.out()?;
    let blocks = ingest(cfg.manifest()?)?;
    let labeled = label(&blocks, &LabelPolicy::for_target(target));
    let split = split_labeled(&labeled, cfg.seed())?;
    let subjects: Vec<String> = if all_subjects {
        split.all().cloned().collect()
    } else {
        split
            .train
            .iter()
            .chain(&split.validation)
            .cloned()
            .collect()
    };
    let mode = if kind.is_sequence() {
        ExampleMode::Sequence(sequence_config(cfg))
    } else {
        ExampleMode::Feature
    };
    let set = make_examples(&labeled, &plan, mode, modality)?.subset(&subjects);
    let trained = fit_examples(&set, &model)?;
    create_dir(out)?;
    trained.save(&out.join("model.json"))?;
    let summary = TrainSummary {
        target,
        modality,
        plan,
        window: plan.label(),
        model: &model,
        split: &split,
        trained_subjects: &subjects,
        examples: set.len(),
        positive_examples: set.examples.iter().filter(|e| e.label).count(),
        warnings: &trained.warnings,
    };
    write(&out.join("train.json"), to_json(&summary)?.as_bytes())?;
    for w in &trained.warnings {
        log::warn!("{w}");
    }
    println!(
        "trained {kind} on {} examples from {} subjects: {}",
        set.len(),
        subjects.len(),
        out.join("model.json").display()
    );
    Ok(())
}

pub fn evaluate(cfg: &RunConfig) -> Result<(), CliError> {
    let target = cfg.target()?;
    let modality = cfg.modality()?;
    let plans = cfg.windows("grid")?;
    let models = cfg
        .models("all")?
        .into_iter()
        .map(|k| model_config(cfg, k, modality))
        .collect::<Result<Vec<_>, _>>()?;
    let config = ExperimentConfig {
        target,
        modality,
        plans,
        models,
        seed: cfg.seed(),
        cv_folds: cfg.cv_folds.unwrap_or(5),
        sequence: sequence_config(cfg),
    };
    let out: PathBuf = cfg.out.clone().unwrap_or_else(|| PathBuf::from("."));
    let blocks = ingest(cfg.manifest()?)?;
    let report = run_experiment(&blocks, &config)?;
    create_dir(&out)?;
    let text = render_text(&report);
    write(&out.join("report.json"), report.to_json()?.as_bytes())?;
    write(&out.join("report.txt"), text.as_bytes())?;
    write(
        &out.join("predictions.csv"),
        predictions_csv(&report).as_bytes(),
    )?;
    print!("{text}");
    Ok(())
}

pub fn report(path: &Path, out: Option<&Path>) -> Result<(), CliError> {
    let text = fs::read_to_string(path).map_err(|e| io_error(path, e))?;
    let report = ExperimentReport::from_json(&text)?;
    let rendered = render_text(&report);
    match out {
        Some(dest) => write(dest, rendered.as_bytes()),
        None => {
            print!("{rendered}");
            Ok(())
        }
    }
}
