//! L2-regularized linear classifiers: logistic regression by full-batch
//! gradient descent and a linear SVM by Pegasos subgradient steps.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::check_training_set;
use crate::error::Result;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LogRegConfig {
    pub lambda: f64,
    pub epochs: usize,
    pub step: f64,
}

impl Default for LogRegConfig {
    fn default() -> Self {
        Self {
            lambda: 1e-3,
            epochs: 500,
            step: 0.1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogisticRegression {
    pub weights: Vec<f64>,
    pub bias: f64,
    /// Objective value before each epoch's update, plus the final value.
    pub loss_history: Vec<f64>,
}

fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// `log(1 + exp(-m))` without overflow.
fn log_loss_margin(m: f64) -> f64 {
    if m > 0.0 {
        (-m).exp().ln_1p()
    } else {
        -m + m.exp().ln_1p()
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

impl LogisticRegression {
    pub fn decision(&self, row: &[f64]) -> f64 {
        dot(&self.weights, row) + self.bias
    }

    pub fn predict_proba(&self, row: &[f64]) -> f64 {
        sigmoid(self.decision(row))
    }

    pub fn predict(&self, row: &[f64]) -> bool {
        self.predict_proba(row) >= 0.5
    }

    fn objective(&self, x: &[Vec<f64>], y: &[bool], w: &[f64], lambda: f64) -> f64 {
        let total_w: f64 = w.iter().sum();
        let data: f64 = x
            .iter()
            .zip(y)
            .zip(w)
            .map(|((r, &yi), wi)| {
                let s = if yi { 1.0 } else { -1.0 };
                wi * log_loss_margin(s * self.decision(r))
            })
            .sum::<f64>()
            / total_w;
        data + 0.5 * lambda * dot(&self.weights, &self.weights)
    }
}

/// Full-batch gradient descent from zero on the weighted mean log loss plus
/// `lambda / 2 * |w|^2` (bias unregularized).
pub fn train_logreg(
    x: &[Vec<f64>],
    y: &[bool],
    sample_weights: &[f64],
    cfg: &LogRegConfig,
) -> Result<LogisticRegression> {
    let d = check_training_set(x, y, sample_weights)?;
    let total_w: f64 = sample_weights.iter().sum();
    let mut model = LogisticRegression {
        weights: vec![0.0; d],
        bias: 0.0,
        loss_history: Vec::with_capacity(cfg.epochs + 1),
    };
    for _ in 0..cfg.epochs {
        model
            .loss_history
            .push(model.objective(x, y, sample_weights, cfg.lambda));
        let mut gw = vec![0.0; d];
        let mut gb = 0.0;
        for ((r, &yi), wi) in x.iter().zip(y).zip(sample_weights) {
            let err = wi * (model.predict_proba(r) - if yi { 1.0 } else { 0.0 }) / total_w;
            for (g, v) in gw.iter_mut().zip(r) {
                *g += err * v;
            }
            gb += err;
        }
        for (w, g) in model.weights.iter_mut().zip(&gw) {
            *w -= cfg.step * (g + cfg.lambda * *w);
        }
        model.bias -= cfg.step * gb;
    }
    model
        .loss_history
        .push(model.objective(x, y, sample_weights, cfg.lambda));
    Ok(model)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SvmConfig {
    pub lambda: f64,
    pub epochs: usize,
}

impl Default for SvmConfig {
    fn default() -> Self {
        Self {
            lambda: 1e-3,
            epochs: 50,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearSvm {
    pub weights: Vec<f64>,
    /// Weight of the constant feature, regularized like the others.
    pub bias: f64,
}

impl LinearSvm {
    pub fn decision(&self, row: &[f64]) -> f64 {
        dot(&self.weights, row) + self.bias
    }

    pub fn predict(&self, row: &[f64]) -> bool {
        self.decision(row) > 0.0
    }
}

/// Pegasos: step `1 / (lambda t)` on the weighted hinge loss of one sample
/// at a time, visiting samples in a seeded shuffled order each epoch, then
/// projecting onto the ball of radius `1 / sqrt(lambda)`.
pub fn train_svm(
    x: &[Vec<f64>],
    y: &[bool],
    sample_weights: &[f64],
    cfg: &SvmConfig,
    seed: u64,
) -> Result<LinearSvm> {
    let d = check_training_set(x, y, sample_weights)?;
    let mean_w = sample_weights.iter().sum::<f64>() / sample_weights.len() as f64;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut w = vec![0.0; d + 1];
    let mut order: Vec<usize> = (0..x.len()).collect();
    let radius = 1.0 / cfg.lambda.sqrt();
    let mut t = 0usize;
    for _ in 0..cfg.epochs {
        order.shuffle(&mut rng);
        for &i in &order {
            t += 1;
            let eta = 1.0 / (cfg.lambda * t as f64);
            let s = if y[i] { 1.0 } else { -1.0 };
            let margin = s * (dot(&w[..d], &x[i]) + w[d]);
            let shrink = 1.0 - eta * cfg.lambda;
            w.iter_mut().for_each(|v| *v *= shrink);
            if margin < 1.0 {
                let scale = eta * s * sample_weights[i] / mean_w;
                for (wj, v) in w.iter_mut().zip(&x[i]) {
                    *wj += scale * v;
                }
                w[d] += scale;
            }
            let norm = dot(&w, &w).sqrt();
            if norm > radius {
                w.iter_mut().for_each(|v| *v *= radius / norm);
            }
        }
    }
    let bias = w.pop().unwrap_or(0.0);
    Ok(LinearSvm { weights: w, bias })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::testdata::{blobs, xor};

    fn accuracy(pred: impl Fn(&[f64]) -> bool, x: &[Vec<f64>], y: &[bool]) -> f64 {
        x.iter().zip(y).filter(|(r, l)| pred(r) == **l).count() as f64 / y.len() as f64
    }

    #[test]
    fn logreg_fits_blobs_not_xor() {
        let (x, y) = blobs(200, 1);
        let w = vec![1.0; y.len()];
        let m = train_logreg(&x, &y, &w, &LogRegConfig::default()).unwrap();
        assert!(accuracy(|r| m.predict(r), &x, &y) >= 0.98);
        for pair in m.loss_history.windows(2) {
            assert!(pair[1] <= pair[0] + 1e-12);
        }
        let (x, y) = xor(400, 2);
        let m = train_logreg(&x, &y, &vec![1.0; y.len()], &LogRegConfig::default()).unwrap();
        assert!(accuracy(|r| m.predict(r), &x, &y) <= 0.6);
    }

    #[test]
    fn svm_fits_blobs_and_is_seed_deterministic() {
        let (x, y) = blobs(200, 3);
        let (tx, ty) = blobs(200, 4);
        let w = vec![1.0; y.len()];
        let m = train_svm(&x, &y, &w, &SvmConfig::default(), 7).unwrap();
        assert!(accuracy(|r| m.predict(r), &tx, &ty) >= 0.95);
        assert_eq!(m, train_svm(&x, &y, &w, &SvmConfig::default(), 7).unwrap());
    }

    #[test]
    fn svm_on_identical_rows_predicts_the_majority() {
        let x = vec![vec![0.0, 0.0]; 30];
        let y: Vec<bool> = (0..30).map(|i| i < 20).collect();
        let m = train_svm(&x, &y, &vec![1.0; 30], &SvmConfig::default(), 1).unwrap();
        assert!((accuracy(|r| m.predict(r), &x, &y) - 20.0 / 30.0).abs() < 1e-12);
    }

    #[test]
    fn single_class_is_an_error() {
        let x = vec![vec![1.0], vec![2.0]];
        assert!(train_logreg(&x, &[true, true], &[1.0, 1.0], &LogRegConfig::default()).is_err());
        assert!(train_svm(&x, &[false, false], &[1.0, 1.0], &SvmConfig::default(), 0).is_err());
    }
}
