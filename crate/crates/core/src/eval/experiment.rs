use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::metrics::{score, Metrics};
use crate::dataset::{
    cv_folds, label, make_examples_prepared, prepare_blocks, split_subjects, ExampleMode,
    ExampleSet, LabelPolicy, LabeledBlock, Modality, RecordingBlock, SequenceConfig, SplitPlan,
    Target,
};
use crate::error::{Error, Result};
use crate::features::FEATURE_REGISTRY_VERSION;
use crate::models::{
    vote_blocks, BlockPrediction, ClassWeight, ModelConfig, ModelKind, TrainedModel,
};
use crate::signals::WindowPlan;
use crate::synth::derive_seed;

/// Version of the serialized [`ExperimentReport`] layout.
pub const REPORT_FORMAT_VERSION: u32 = 1;

/// PCA width used for the combined-modality feature models.
pub const ALL_MODALITY_PCA_COMPONENTS: usize = 189;

/// One grid: every model crossed with every window plan, for one target and
/// modality set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub target: Target,
    pub modality: Modality,
    pub plans: Vec<WindowPlan>,
    pub models: Vec<ModelConfig>,
    /// Seeds the subject split and the fold assignment.
    pub seed: u64,
    pub cv_folds: usize,
    pub sequence: SequenceConfig,
}

impl ExperimentConfig {
    /// The four-model, four-window grid with class-balanced weighting.
    pub fn grid(target: Target, modality: Modality, seed: u64) -> Self {
        Self {
            target,
            modality,
            plans: default_plans(),
            models: ModelKind::ALL
                .iter()
                .map(|&k| default_model(k, modality, seed))
                .collect(),
            seed,
            cv_folds: 5,
            sequence: SequenceConfig::default(),
        }
    }

    /// Hex SHA-256 of the canonical JSON form.
    pub fn digest(&self) -> Result<String> {
        Ok(hex::encode(Sha256::digest(serde_json::to_vec(self)?)))
    }
}

pub fn default_plans() -> Vec<WindowPlan> {
    vec![
        WindowPlan::windowed(5.0),
        WindowPlan::windowed(10.0),
        WindowPlan::windowed(20.0),
        WindowPlan::FullBlock,
    ]
}

/// Model defaults used by experiment grids: balanced class weights, and
/// PCA for feature models on the combined modality set.
pub fn default_model(kind: ModelKind, modality: Modality, seed: u64) -> ModelConfig {
    ModelConfig {
        class_weight: ClassWeight::Balanced,
        pca_components: (modality == Modality::All && !kind.is_sequence())
            .then_some(ALL_MODALITY_PCA_COMPONENTS),
        ..ModelConfig::new(kind, seed)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoldResult {
    pub fold: usize,
    pub subjects: Vec<String>,
    /// Block-level metrics on the held-out fold.
    pub metrics: Metrics,
}

/// Results of one (model, window plan) pair.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellReport {
    pub model: ModelKind,
    pub window: String,
    pub plan: WindowPlan,
    /// Block-level metrics on the test subjects after majority voting.
    pub test: Metrics,
    /// Slice-level test metrics, before voting.
    pub test_slices: Metrics,
    pub folds: Vec<FoldResult>,
    /// Arithmetic mean of fold recalls.
    pub mean_cv_recall: f64,
    pub mean_cv_accuracy: f64,
    pub train_examples: usize,
    pub test_blocks: Vec<BlockPrediction>,
    pub warnings: Vec<String>,
}

/// The window plan picked for a model, by mean cross-validation accuracy.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BestWindow {
    pub model: ModelKind,
    pub window: String,
    pub test_accuracy: f64,
    pub mean_cv_recall: f64,
    pub mean_cv_accuracy: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportMetadata {
    pub seed: u64,
    pub target: Target,
    pub modality: Modality,
    pub config_digest: String,
    pub feature_registry_version: u32,
    pub labeled_blocks: usize,
    pub split: SplitPlan,
    pub folds: Vec<Vec<String>>,
    pub notes: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub format_version: u32,
    pub metadata: ReportMetadata,
    pub config: ExperimentConfig,
    pub cells: Vec<CellReport>,
    pub best: Vec<BestWindow>,
}

impl ExperimentReport {
    pub fn cell(&self, model: ModelKind, plan: &WindowPlan) -> Option<&CellReport> {
        self.cells
            .iter()
            .find(|c| c.model == model && c.plan == *plan)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let report: Self = serde_json::from_str(text)?;
        if report.format_version != REPORT_FORMAT_VERSION {
            return Err(Error::Data(format!(
                "report format version {} is not supported (expected {REPORT_FORMAT_VERSION})",
                report.format_version
            )));
        }
        Ok(report)
    }

    /// Hex SHA-256 of the JSON form.
    pub fn digest(&self) -> Result<String> {
        Ok(hex::encode(Sha256::digest(self.to_json()?.as_bytes())))
    }
}

const NOTES: [&str; 3] = [
    "VAS bands: none < 4, moderate 4..=7, extreme > 7",
    "precision and F1 are reported in addition to accuracy and recall",
    "slice-level metrics are computed before majority voting; all other test metrics are per block",
];

/// Runs the grid: subject split, k-fold cross-validation on the training
/// subjects, a final fit on training plus validation subjects, and
/// block-level scoring on the test subjects.
pub fn run_experiment(
    blocks: &[RecordingBlock],
    config: &ExperimentConfig,
) -> Result<ExperimentReport> {
    if config.plans.is_empty() || config.models.is_empty() {
        return Err(Error::Contract(
            "experiment needs at least one window plan and one model".into(),
        ));
    }
    for plan in &config.plans {
        plan.validate()?;
    }
    let labeled = label(blocks, &LabelPolicy::for_target(config.target));
    if labeled.is_empty() {
        return Err(Error::Data(format!(
            "no blocks carry a {} label",
            config.target
        )));
    }

    let split = split_labeled(&labeled, config.seed)?;
    let folds = cv_folds(
        &split.train,
        config.cv_folds,
        derive_seed(config.seed, &[2]),
    )?;

    log::info!(
        "{} {}: {} labeled blocks, {} train / {} validation / {} test subjects",
        config.target,
        config.modality,
        labeled.len(),
        split.train.len(),
        split.validation.len(),
        split.test.len()
    );
    let prepared = prepare_blocks(&labeled, config.modality)?;

    let needs_features = config.models.iter().any(|m| !m.kind.is_sequence());
    let needs_sequences = config.models.iter().any(|m| m.kind.is_sequence());
    let final_train: Vec<String> = split
        .train
        .iter()
        .chain(&split.validation)
        .cloned()
        .collect();

    let mut cells = Vec::new();
    for plan in &config.plans {
        let ctx = format!("window {}", plan.label());
        let features = needs_features
            .then(|| make_examples_prepared(&labeled, &prepared, plan, ExampleMode::Feature))
            .transpose()
            .map_err(|e| e.context(&ctx))?;
        let sequences = needs_sequences
            .then(|| {
                make_examples_prepared(
                    &labeled,
                    &prepared,
                    plan,
                    ExampleMode::Sequence(config.sequence),
                )
            })
            .transpose()
            .map_err(|e| e.context(&ctx))?;
        for model in &config.models {
            let set = if model.kind.is_sequence() {
                &sequences
            } else {
                &features
            };
            let set = set
                .as_ref()
                .expect("example set built for every model mode");
            log::info!("cell {} {}", model.kind, plan.label());
            let cell = run_cell(set, &split, &final_train, &folds, model)
                .map_err(|e| e.context(&format!("{} {}", model.kind, plan.label())))?;
            cells.push(cell);
        }
    }

    let mut best = Vec::new();
    for model in &config.models {
        let top =
            cells
                .iter()
                .filter(|c| c.model == model.kind)
                .fold(None::<&CellReport>, |acc, c| match acc {
                    Some(a) if a.mean_cv_accuracy >= c.mean_cv_accuracy => Some(a),
                    _ => Some(c),
                });
        if let Some(c) = top {
            if !best.iter().any(|b: &BestWindow| b.model == c.model) {
                best.push(BestWindow {
                    model: c.model,
                    window: c.window.clone(),
                    test_accuracy: c.test.accuracy,
                    mean_cv_recall: c.mean_cv_recall,
                    mean_cv_accuracy: c.mean_cv_accuracy,
                });
            }
        }
    }

    Ok(ExperimentReport {
        format_version: REPORT_FORMAT_VERSION,
        metadata: ReportMetadata {
            seed: config.seed,
            target: config.target,
            modality: config.modality,
            config_digest: config.digest()?,
            feature_registry_version: FEATURE_REGISTRY_VERSION,
            labeled_blocks: labeled.len(),
            split,
            folds,
            notes: NOTES.iter().map(|s| s.to_string()).collect(),
        },
        config: config.clone(),
        cells,
        best,
    })
}

/// Subject split stratified by each subject's positive-block fraction.
pub fn split_labeled(labeled: &[LabeledBlock], seed: u64) -> Result<SplitPlan> {
    let mut per_subject: BTreeMap<&str, (usize, usize)> = BTreeMap::new();
    for lb in labeled {
        let e = per_subject.entry(&lb.block.subject_id).or_default();
        e.0 += lb.label as usize;
        e.1 += 1;
    }
    let fractions: Vec<(String, f64)> = per_subject
        .iter()
        .map(|(s, &(p, n))| (s.to_string(), p as f64 / n as f64))
        .collect();
    split_subjects(&fractions, seed)
}

/// Fits `model` on every example of `set`.
pub fn fit_examples(set: &ExampleSet, model: &ModelConfig) -> Result<TrainedModel> {
    let y: Vec<bool> = set.examples.iter().map(|e| e.label).collect();
    if model.kind.is_sequence() {
        let seqs: Vec<Vec<Vec<f64>>> = set
            .examples
            .iter()
            .filter_map(|e| e.sequence().map(<[_]>::to_vec))
            .collect();
        TrainedModel::fit_sequences(&set.columns, &seqs, &y, model)
    } else {
        let rows: Vec<Vec<f64>> = set
            .examples
            .iter()
            .filter_map(|e| e.features().map(<[_]>::to_vec))
            .collect();
        TrainedModel::fit_features(&set.columns, &rows, &y, model)
    }
}

/// Per-slice predictions for every example of `set`.
pub fn predict_slices(model: &TrainedModel, set: &ExampleSet) -> Result<Vec<bool>> {
    if model.config.kind.is_sequence() {
        let seqs: Vec<Vec<Vec<f64>>> = set
            .examples
            .iter()
            .map(|e| {
                e.sequence()
                    .map(<[_]>::to_vec)
                    .ok_or_else(|| Error::Contract("expected sequence examples".into()))
            })
            .collect::<Result<_>>()?;
        model.predict_sequences(&seqs)
    } else {
        let rows: Vec<Vec<f64>> = set
            .examples
            .iter()
            .map(|e| {
                e.features()
                    .map(<[_]>::to_vec)
                    .ok_or_else(|| Error::Contract("expected feature examples".into()))
            })
            .collect::<Result<_>>()?;
        model.predict_features(&set.columns, &rows)
    }
}

/// Slice predictions voted into block predictions.
pub fn predict_blocks(
    model: &TrainedModel,
    set: &ExampleSet,
) -> Result<(Vec<bool>, Vec<BlockPrediction>)> {
    let slices = predict_slices(model, set)?;
    let blocks = vote_blocks(
        set.examples
            .iter()
            .zip(&slices)
            .map(|(e, &p)| (e.block_key.as_str(), e.subject_id.as_str(), e.label, p)),
    )?;
    Ok((slices, blocks))
}

fn block_metrics(blocks: &[BlockPrediction]) -> Result<Metrics> {
    let pred: Vec<bool> = blocks.iter().map(|b| b.predicted).collect();
    let truth: Vec<bool> = blocks.iter().map(|b| b.label).collect();
    score(&pred, &truth)
}

fn run_cell(
    set: &ExampleSet,
    split: &SplitPlan,
    final_train: &[String],
    folds: &[Vec<String>],
    model: &ModelConfig,
) -> Result<CellReport> {
    let mut fold_results = Vec::with_capacity(folds.len());
    for (i, held_out) in folds.iter().enumerate() {
        let held: BTreeSet<&String> = held_out.iter().collect();
        let train_ids: Vec<String> = split
            .train
            .iter()
            .filter(|s| !held.contains(s))
            .cloned()
            .collect();
        let trained = fit_examples(&set.subset(&train_ids), model)
            .map_err(|e| e.context(&format!("fold {i}")))?;
        let (_, blocks) = predict_blocks(&trained, &set.subset(held_out))?;
        fold_results.push(FoldResult {
            fold: i,
            subjects: held_out.clone(),
            metrics: block_metrics(&blocks)?,
        });
    }
    let n = fold_results.len().max(1) as f64;
    let mean_cv_recall = fold_results.iter().map(|f| f.metrics.recall).sum::<f64>() / n;
    let mean_cv_accuracy = fold_results.iter().map(|f| f.metrics.accuracy).sum::<f64>() / n;

    let train_set = set.subset(final_train);
    let trained = fit_examples(&train_set, model).map_err(|e| e.context("final fit"))?;
    let test_set = set.subset(&split.test);
    if test_set.is_empty() {
        return Err(Error::Split(
            "the test split holds no labeled examples".into(),
        ));
    }
    let (slices, test_blocks) = predict_blocks(&trained, &test_set)?;
    let slice_labels: Vec<bool> = test_set.examples.iter().map(|e| e.label).collect();
    Ok(CellReport {
        model: model.kind,
        window: set.plan.label(),
        plan: set.plan,
        test: block_metrics(&test_blocks)?,
        test_slices: score(&slices, &slice_labels)?,
        folds: fold_results,
        mean_cv_recall,
        mean_cv_accuracy,
        train_examples: train_set.len(),
        test_blocks,
        warnings: trained.warnings,
    })
}
