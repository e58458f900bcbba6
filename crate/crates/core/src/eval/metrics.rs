use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Counts with the fatigue class as positive.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    pub tp: usize,
    pub fp: usize,
    pub tn: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
}

impl ConfusionMatrix {
    pub fn from_predictions(predictions: &[bool], labels: &[bool]) -> Result<Self> {
        if predictions.len() != labels.len() {
            return Err(Error::Contract(format!(
                "{} predictions for {} labels",
                predictions.len(),
                labels.len()
            )));
        }
        let mut m = ConfusionMatrix::default();
        for (&p, &l) in predictions.iter().zip(labels) {
            match (p, l) {
                (true, true) => m.tp += 1,
                (true, false) => m.fp += 1,
                (false, false) => m.tn += 1,
                (false, true) => m.fn_ += 1,
            }
        }
        Ok(m)
    }

    pub fn total(&self) -> usize {
        self.tp + self.fp + self.tn + self.fn_
    }

    pub fn metrics(&self) -> Metrics {
        let ratio = |num: usize, den: usize| {
            if den == 0 {
                (0.0, false)
            } else {
                (num as f64 / den as f64, true)
            }
        };
        let (accuracy, _) = ratio(self.tp + self.tn, self.total());
        let (recall, recall_defined) = ratio(self.tp, self.tp + self.fn_);
        let (precision, precision_defined) = ratio(self.tp, self.tp + self.fp);
        let f1 = if precision + recall > 0.0 {
            2.0 * precision * recall / (precision + recall)
        } else {
            0.0
        };
        Metrics {
            confusion: *self,
            accuracy,
            recall,
            recall_defined,
            precision,
            precision_defined,
            f1,
        }
    }
}

/// Binary classification metrics. Undefined ratios are reported as 0 with
/// their `*_defined` flag cleared.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub confusion: ConfusionMatrix,
    pub accuracy: f64,
    /// Recall of the fatigue class.
    pub recall: f64,
    pub recall_defined: bool,
    pub precision: f64,
    pub precision_defined: bool,
    pub f1: f64,
}

/// Scores predictions against labels; needs at least one pair.
pub fn score(predictions: &[bool], labels: &[bool]) -> Result<Metrics> {
    if labels.is_empty() {
        return Err(Error::Contract(
            "cannot score an empty prediction set".into(),
        ));
    }
    Ok(ConfusionMatrix::from_predictions(predictions, labels)?.metrics())
}
