//! Published results of the original study, embedded for side-by-side
//! comparison. No threshold is attached to them.

use serde::Serialize;

use crate::dataset::{Modality, Target};
use crate::models::ModelKind;

/// Window columns of the published accuracy grids.
pub const REFERENCE_WINDOWS: [&str; 4] = ["5s", "10s", "20s", "full"];

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ReferenceRow {
    pub model: ModelKind,
    /// Block accuracy per [`REFERENCE_WINDOWS`] entry, as a fraction.
    pub accuracy: [f64; 4],
    /// Mean cross-validation recall of the fatigue class.
    pub avg_recall: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ReferenceTable {
    pub title: &'static str,
    pub target: Target,
    pub modality: Modality,
    pub rows: [ReferenceRow; 4],
}

const fn row(model: ModelKind, accuracy: [f64; 4], avg_recall: f64) -> ReferenceRow {
    ReferenceRow {
        model,
        accuracy,
        avg_recall,
    }
}

pub const REFERENCE_TABLES: [ReferenceTable; 4] = [
    ReferenceTable {
        title: "Detection of CF with EEG features",
        target: Target::Cf,
        modality: Modality::Eeg,
        rows: [
            row(ModelKind::Logreg, [0.697, 0.726, 0.713, 0.623], 0.76),
            row(ModelKind::Svm, [0.731, 0.733, 0.717, 0.694], 0.81),
            row(ModelKind::Rf, [0.723, 0.819, 0.791, 0.763], 0.89),
            row(ModelKind::Lstm, [0.698, 0.718, 0.738, 0.819], 0.82),
        ],
    },
    ReferenceTable {
        title: "Detection of CF with ECG + EDA + EMG features",
        target: Target::Cf,
        modality: Modality::Physio,
        rows: [
            row(ModelKind::Logreg, [0.698, 0.701, 0.672, 0.653], 0.69),
            row(ModelKind::Svm, [0.712, 0.717, 0.708, 0.701], 0.73),
            row(ModelKind::Rf, [0.748, 0.763, 0.721, 0.709], 0.71),
            row(ModelKind::Lstm, [0.622, 0.637, 0.689, 0.701], 0.69),
        ],
    },
    ReferenceTable {
        title: "Detection of PF with ECG + EDA + EMG features",
        target: Target::Pf,
        modality: Modality::Physio,
        rows: [
            row(ModelKind::Logreg, [0.722, 0.722, 0.682, 0.629], 0.74),
            row(ModelKind::Svm, [0.761, 0.796, 0.752, 0.731], 0.86),
            row(ModelKind::Rf, [0.799, 0.805, 0.776, 0.772], 0.88),
            row(ModelKind::Lstm, [0.642, 0.648, 0.627, 0.689], 0.79),
        ],
    },
    ReferenceTable {
        title: "Detection of CF with EEG + ECG + EDA + EMG features",
        target: Target::Cf,
        modality: Modality::All,
        rows: [
            row(ModelKind::Logreg, [0.640, 0.669, 0.661, 0.604], 0.69),
            row(ModelKind::Svm, [0.703, 0.746, 0.745, 0.703], 0.79),
            row(ModelKind::Rf, [0.679, 0.772, 0.768, 0.745], 0.81),
            row(ModelKind::Lstm, [0.713, 0.742, 0.748, 0.841], 0.90),
        ],
    },
];

pub fn reference_for(target: Target, modality: Modality) -> Option<&'static ReferenceTable> {
    REFERENCE_TABLES
        .iter()
        .find(|t| t.target == target && t.modality == modality)
}

/// Earlier wearable-sensor results the study compared against.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PriorResult {
    pub target: Target,
    pub model: &'static str,
    pub accuracy: f64,
    pub avg_recall: f64,
    pub source: &'static str,
}

pub const PRIOR_RESULTS: [PriorResult; 4] = [
    PriorResult {
        target: Target::Pf,
        model: "RF",
        accuracy: 0.7185,
        avg_recall: 0.72,
        source: "Luo et al. 2020",
    },
    PriorResult {
        target: Target::Pf,
        model: "cCNN + RF",
        accuracy: 0.7140,
        avg_recall: 0.73,
        source: "Luo et al. 2020",
    },
    PriorResult {
        target: Target::Cf,
        model: "RF",
        accuracy: 0.6469,
        avg_recall: 0.65,
        source: "Luo et al. 2020",
    },
    PriorResult {
        target: Target::Cf,
        model: "RF",
        accuracy: 0.6620,
        avg_recall: 0.66,
        source: "Luo et al. 2020",
    },
];

/// The study's headline result per target: best cell across its grids.
pub fn headline(target: Target) -> (ModelKind, &'static str, f64, f64) {
    let mut best = (ModelKind::Rf, "", 0.0, 0.0);
    for t in REFERENCE_TABLES.iter().filter(|t| t.target == target) {
        for r in &t.rows {
            for (w, &acc) in REFERENCE_WINDOWS.iter().zip(&r.accuracy) {
                if acc > best.2 {
                    best = (r.model, *w, acc, r.avg_recall);
                }
            }
        }
    }
    best
}
