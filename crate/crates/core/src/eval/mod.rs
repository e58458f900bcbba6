//! Metrics, the cross-validated experiment grid, published reference
//! numbers, VAS summaries and report rendering.

mod experiment;
mod metrics;
pub mod reference;
mod render;
mod vas;

pub use experiment::{
    default_model, default_plans, fit_examples, predict_blocks, predict_slices, run_experiment,
    split_labeled, BestWindow, CellReport, ExperimentConfig, ExperimentReport, FoldResult,
    ReportMetadata, ALL_MODALITY_PCA_COMPONENTS, REPORT_FORMAT_VERSION,
};
pub use metrics::{score, ConfusionMatrix, Metrics};
pub use render::{predictions_csv, render_text};
pub use vas::{summarize_vas, BandCounts, ReadingVas, VasBand, VasSummary, VAS_QUESTIONS};
