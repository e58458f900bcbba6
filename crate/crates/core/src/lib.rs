//! Multimodal fatigue detection: ECG/EDA/EMG/EEG preprocessing and feature
//! extraction, windowed classification with block-level majority voting,
//! subject-disjoint evaluation, and a deterministic synthetic-study
//! generator that doubles as a ground-truth oracle.

// `!(x > 0.0)` deliberately treats NaN as invalid.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod dataset;
pub mod ecg;
pub mod eda;
pub mod eeg;
pub mod emg;
pub mod error;
pub mod eval;
pub mod features;
pub mod models;
pub mod signals;
pub mod spectral;
pub mod stats;
pub mod synth;

pub use error::{Error, Result};
