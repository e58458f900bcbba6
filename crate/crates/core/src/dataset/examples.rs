use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::LabeledBlock;
use crate::error::{Error, Result};
use crate::features::{feature_names, sequence_channel_names, PreparedBlock};
use crate::signals::WindowPlan;

pub use crate::features::Modality;

/// Step rate of sequence examples when not configured.
pub const DEFAULT_SEQUENCE_STEP_HZ: f64 = 2.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SequenceConfig {
    /// Every channel is bin-averaged to this common rate.
    pub step_hz: f64,
}

impl Default for SequenceConfig {
    fn default() -> Self {
        Self {
            step_hz: DEFAULT_SEQUENCE_STEP_HZ,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum ExampleMode {
    /// One named feature vector per window.
    Feature,
    /// A `t x C` matrix per window.
    Sequence(SequenceConfig),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum ExamplePayload {
    Features(Vec<f64>),
    /// Outer index is time, inner is channel.
    Sequence(Vec<Vec<f64>>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WindowExample {
    pub subject_id: String,
    /// Key of the parent block, `subject/session/rN`.
    pub block_key: String,
    pub slice_index: usize,
    pub label: bool,
    pub payload: ExamplePayload,
}

impl WindowExample {
    pub fn features(&self) -> Option<&[f64]> {
        match &self.payload {
            ExamplePayload::Features(v) => Some(v),
            ExamplePayload::Sequence(_) => None,
        }
    }

    pub fn sequence(&self) -> Option<&[Vec<f64>]> {
        match &self.payload {
            ExamplePayload::Sequence(s) => Some(s),
            ExamplePayload::Features(_) => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExampleSet {
    pub modality: Modality,
    pub mode: ExampleMode,
    pub plan: WindowPlan,
    /// Feature names (feature mode) or channel names (sequence mode).
    pub columns: Vec<String>,
    pub examples: Vec<WindowExample>,
}

impl ExampleSet {
    pub fn len(&self) -> usize {
        self.examples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.examples.is_empty()
    }

    /// Examples whose subject is in `subjects`.
    pub fn subset(&self, subjects: &[String]) -> ExampleSet {
        ExampleSet {
            examples: self
                .examples
                .iter()
                .filter(|e| subjects.contains(&e.subject_id))
                .cloned()
                .collect(),
            columns: self.columns.clone(),
            ..*self
        }
    }
}

/// Rejects blocks whose channels disagree on duration by more than one
/// sample of the coarser channel.
pub fn check_alignment(block: &super::RecordingBlock) -> Result<()> {
    let longest = block
        .signals
        .values()
        .map(|s| s.duration_s())
        .fold(0.0, f64::max);
    for (ch, s) in &block.signals {
        if longest - s.duration_s() > 1.0 / s.sampling_rate_hz() + 1e-9 {
            return Err(Error::Alignment(format!(
                "{}: {ch} covers {:.4} s but the block spans {:.4} s",
                block.key(),
                s.duration_s(),
                longest
            )));
        }
    }
    Ok(())
}

/// Prepares blocks once so several window plans can reuse the work.
pub fn prepare_blocks(blocks: &[LabeledBlock], modality: Modality) -> Result<Vec<PreparedBlock>> {
    blocks
        .par_iter()
        .map(|lb| {
            check_alignment(lb.block)?;
            PreparedBlock::prepare(lb.block, modality)
        })
        .collect()
}

/// Slices every block by `plan` and builds one example per slice; each
/// slice inherits its block's label.
pub fn make_examples(
    blocks: &[LabeledBlock],
    plan: &WindowPlan,
    mode: ExampleMode,
    modality: Modality,
) -> Result<ExampleSet> {
    let prepared = prepare_blocks(blocks, modality)?;
    make_examples_prepared(blocks, &prepared, plan, mode)
}

pub fn make_examples_prepared(
    blocks: &[LabeledBlock],
    prepared: &[PreparedBlock],
    plan: &WindowPlan,
    mode: ExampleMode,
) -> Result<ExampleSet> {
    if blocks.len() != prepared.len() {
        return Err(Error::Contract(format!(
            "{} blocks but {} prepared blocks",
            blocks.len(),
            prepared.len()
        )));
    }
    let modality = prepared
        .first()
        .map_or(Modality::All, PreparedBlock::modality);
    if prepared.iter().any(|p| p.modality() != modality) {
        return Err(Error::Contract("prepared blocks mix modality sets".into()));
    }
    let per_block: Vec<Result<Vec<WindowExample>>> = blocks
        .par_iter()
        .zip(prepared.par_iter())
        .map(|(lb, prep)| {
            let windows = plan.time_ranges(prep.duration_s()).map_err(|e| match e {
                Error::EmptySlice { .. } => Error::Data(format!("{}: {e}", lb.block.key())),
                other => other,
            })?;
            let sequence = match mode {
                ExampleMode::Sequence(cfg) => Some((prep.sequence(cfg.step_hz)?, cfg.step_hz)),
                ExampleMode::Feature => None,
            };
            windows
                .iter()
                .enumerate()
                .map(|(slice_index, &(t0, t1))| {
                    let payload = match &sequence {
                        None => ExamplePayload::Features(prep.window_features(t0, t1)?),
                        Some((steps, step_hz)) => {
                            let a = (t0 * step_hz).round() as usize;
                            let b = ((t1 * step_hz).round() as usize).min(steps.len());
                            if a >= b {
                                return Err(Error::Data(format!(
                                    "{}: window [{t0}, {t1}) s holds no {step_hz} Hz steps",
                                    lb.block.key()
                                )));
                            }
                            ExamplePayload::Sequence(steps[a..b].to_vec())
                        }
                    };
                    Ok(WindowExample {
                        subject_id: lb.block.subject_id.clone(),
                        block_key: lb.block.key(),
                        slice_index,
                        label: lb.label,
                        payload,
                    })
                })
                .collect()
        })
        .collect();
    let mut examples = Vec::new();
    for block in per_block {
        examples.extend(block?);
    }
    let columns = match mode {
        ExampleMode::Feature => feature_names(modality),
        ExampleMode::Sequence(_) => sequence_channel_names(modality),
    };
    Ok(ExampleSet {
        modality,
        mode,
        plan: *plan,
        columns,
        examples,
    })
}
