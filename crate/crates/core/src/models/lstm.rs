//! Single-layer LSTM classifier trained with full backpropagation through
//! time.
//!
//! Gates, with `z = W x_t + U h_{t-1} + b` split into four `H`-blocks:
//!
//! ```text
//! i = sigmoid(z_i)   f = sigmoid(z_f)   g = tanh(z_g)   o = sigmoid(z_o)
//! c_t = f * c_{t-1} + i * g
//! h_t = o * tanh(c_t)
//! p = sigmoid(v . h_T + c)
//! ```

use std::ops::Range;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LstmConfig {
    pub hidden_size: usize,
    pub epochs: usize,
    pub learning_rate: f64,
    /// Global gradient-norm clip applied to every minibatch gradient.
    pub clip_norm: f64,
    pub batch_size: usize,
}

impl Default for LstmConfig {
    fn default() -> Self {
        Self {
            hidden_size: 256,
            epochs: 30,
            learning_rate: 0.01,
            clip_norm: 5.0,
            batch_size: 16,
        }
    }
}

const GATES: [&str; 4] = ["i", "f", "g", "o"];

/// Parameters live in one flat vector laid out as `[W | U | b | v | c]`,
/// `W` being `4H x C` and `U` `4H x H`, both row-major with gate blocks in
/// `i, f, g, o` order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Lstm {
    pub input_size: usize,
    pub hidden_size: usize,
    pub theta: Vec<f64>,
}

fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

struct Trace {
    /// Per step: gate activations `[i | f | g | o]`, cell state, hidden
    /// state.
    gates: Vec<Vec<f64>>,
    cells: Vec<Vec<f64>>,
    hidden: Vec<Vec<f64>>,
    logit: f64,
}

impl Lstm {
    pub fn new(input_size: usize, hidden_size: usize, seed: u64) -> Result<Self> {
        if input_size == 0 || hidden_size == 0 {
            return Err(Error::Training(
                "LSTM needs input and hidden sizes >= 1".into(),
            ));
        }
        let mut model = Self {
            input_size,
            hidden_size,
            theta: Vec::new(),
        };
        let mut theta = vec![0.0; model.n_params()];
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let scale = 1.0 / (hidden_size as f64).sqrt();
        for r in [model.w_range(), model.u_range(), model.v_range()] {
            for p in &mut theta[r] {
                *p = rng.random_range(-scale..scale);
            }
        }
        let b = model.b_range().start;
        for p in &mut theta[b + hidden_size..b + 2 * hidden_size] {
            *p = 1.0;
        }
        model.theta = theta;
        Ok(model)
    }

    fn w_range(&self) -> Range<usize> {
        0..4 * self.hidden_size * self.input_size
    }

    fn u_range(&self) -> Range<usize> {
        let s = self.w_range().end;
        s..s + 4 * self.hidden_size * self.hidden_size
    }

    fn b_range(&self) -> Range<usize> {
        let s = self.u_range().end;
        s..s + 4 * self.hidden_size
    }

    fn v_range(&self) -> Range<usize> {
        let s = self.b_range().end;
        s..s + self.hidden_size
    }

    fn c_index(&self) -> usize {
        self.v_range().end
    }

    pub fn n_params(&self) -> usize {
        self.c_index() + 1
    }

    /// Named parameter blocks: per-gate slices of `W`, `U` and `b`, then `v`
    /// and `c`.
    pub fn param_blocks(&self) -> Vec<(String, Range<usize>)> {
        let (h, c) = (self.hidden_size, self.input_size);
        let mut out = Vec::new();
        for (name, range, width) in [
            ("W", self.w_range(), c),
            ("U", self.u_range(), h),
            ("b", self.b_range(), 1),
        ] {
            for (k, gate) in GATES.iter().enumerate() {
                let start = range.start + k * h * width;
                out.push((format!("{name}_{gate}"), start..start + h * width));
            }
        }
        out.push(("v".into(), self.v_range()));
        out.push(("c".into(), self.c_index()..self.c_index() + 1));
        out
    }

    fn check_sequence(&self, seq: &[Vec<f64>]) -> Result<()> {
        if seq.is_empty() {
            return Err(Error::Contract("zero-length sequence".into()));
        }
        if let Some(row) = seq.iter().find(|r| r.len() != self.input_size) {
            return Err(Error::Contract(format!(
                "sequence has {} channels, model expects {}",
                row.len(),
                self.input_size
            )));
        }
        Ok(())
    }

    fn run(&self, seq: &[Vec<f64>]) -> Trace {
        let (h, c) = (self.hidden_size, self.input_size);
        let th = &self.theta;
        let (w0, u0, b0, v0) = (
            self.w_range().start,
            self.u_range().start,
            self.b_range().start,
            self.v_range().start,
        );
        let mut trace = Trace {
            gates: Vec::with_capacity(seq.len()),
            cells: Vec::with_capacity(seq.len()),
            hidden: Vec::with_capacity(seq.len()),
            logit: 0.0,
        };
        let mut h_prev = vec![0.0; h];
        let mut c_prev = vec![0.0; h];
        for x in seq {
            let mut z = th[b0..b0 + 4 * h].to_vec();
            for (r, zr) in z.iter_mut().enumerate() {
                let wr = &th[w0 + r * c..w0 + (r + 1) * c];
                let ur = &th[u0 + r * h..u0 + (r + 1) * h];
                *zr += wr.iter().zip(x).map(|(a, b)| a * b).sum::<f64>()
                    + ur.iter().zip(&h_prev).map(|(a, b)| a * b).sum::<f64>();
            }
            for k in 0..h {
                z[k] = sigmoid(z[k]);
                z[h + k] = sigmoid(z[h + k]);
                z[2 * h + k] = z[2 * h + k].tanh();
                z[3 * h + k] = sigmoid(z[3 * h + k]);
            }
            let cell: Vec<f64> = (0..h)
                .map(|k| z[h + k] * c_prev[k] + z[k] * z[2 * h + k])
                .collect();
            let hidden: Vec<f64> = (0..h).map(|k| z[3 * h + k] * cell[k].tanh()).collect();
            trace.gates.push(z);
            h_prev.clone_from(&hidden);
            c_prev.clone_from(&cell);
            trace.cells.push(cell);
            trace.hidden.push(hidden);
        }
        trace.logit = th[self.c_index()]
            + th[v0..v0 + h]
                .iter()
                .zip(&h_prev)
                .map(|(a, b)| a * b)
                .sum::<f64>();
        trace
    }

    pub fn logit(&self, seq: &[Vec<f64>]) -> Result<f64> {
        self.check_sequence(seq)?;
        Ok(self.run(seq).logit)
    }

    pub fn predict_proba(&self, seq: &[Vec<f64>]) -> Result<f64> {
        Ok(sigmoid(self.logit(seq)?))
    }

    /// Weighted binary cross-entropy of one sequence.
    pub fn loss(&self, seq: &[Vec<f64>], label: bool, weight: f64) -> Result<f64> {
        let z = self.logit(seq)?;
        let m = if label { z } else { -z };
        Ok(weight
            * if m > 0.0 {
                (-m).exp().ln_1p()
            } else {
                -m + m.exp().ln_1p()
            })
    }

    /// Adds the gradient of [`Lstm::loss`] to `grad` and returns the loss.
    pub fn accumulate_gradient(
        &self,
        seq: &[Vec<f64>],
        label: bool,
        weight: f64,
        grad: &mut [f64],
    ) -> Result<f64> {
        self.check_sequence(seq)?;
        if grad.len() != self.n_params() {
            return Err(Error::Contract("gradient buffer has the wrong size".into()));
        }
        let (h, c) = (self.hidden_size, self.input_size);
        let th = &self.theta;
        let (w0, u0, b0, v0, c0) = (
            self.w_range().start,
            self.u_range().start,
            self.b_range().start,
            self.v_range().start,
            self.c_index(),
        );
        let trace = self.run(seq);
        let p = sigmoid(trace.logit);
        let y = if label { 1.0 } else { 0.0 };
        let m = if label { trace.logit } else { -trace.logit };
        let loss = weight
            * if m > 0.0 {
                (-m).exp().ln_1p()
            } else {
                -m + m.exp().ln_1p()
            };

        let dlogit = weight * (p - y);
        let h_last = &trace.hidden[seq.len() - 1];
        for k in 0..h {
            grad[v0 + k] += dlogit * h_last[k];
        }
        grad[c0] += dlogit;

        let mut dh: Vec<f64> = th[v0..v0 + h].iter().map(|v| dlogit * v).collect();
        let mut dc = vec![0.0; h];
        let zeros = vec![0.0; h];
        let mut dz = vec![0.0; 4 * h];
        for t in (0..seq.len()).rev() {
            let gates = &trace.gates[t];
            let cell = &trace.cells[t];
            let c_prev = if t > 0 { &trace.cells[t - 1] } else { &zeros };
            let h_prev = if t > 0 { &trace.hidden[t - 1] } else { &zeros };
            for k in 0..h {
                let (i, f, g, o) = (gates[k], gates[h + k], gates[2 * h + k], gates[3 * h + k]);
                let tc = cell[k].tanh();
                let d_o = dh[k] * tc;
                dc[k] += dh[k] * o * (1.0 - tc * tc);
                dz[k] = dc[k] * g * i * (1.0 - i);
                dz[h + k] = dc[k] * c_prev[k] * f * (1.0 - f);
                dz[2 * h + k] = dc[k] * i * (1.0 - g * g);
                dz[3 * h + k] = d_o * o * (1.0 - o);
                dc[k] *= f;
            }
            let x = &seq[t];
            dh.iter_mut().for_each(|v| *v = 0.0);
            for (r, &d) in dz.iter().enumerate() {
                if d == 0.0 {
                    continue;
                }
                grad[b0 + r] += d;
                for (gw, xv) in grad[w0 + r * c..w0 + (r + 1) * c].iter_mut().zip(x) {
                    *gw += d * xv;
                }
                for (gu, hv) in grad[u0 + r * h..u0 + (r + 1) * h].iter_mut().zip(h_prev) {
                    *gu += d * hv;
                }
                for (dhk, uv) in dh.iter_mut().zip(&th[u0 + r * h..u0 + (r + 1) * h]) {
                    *dhk += d * uv;
                }
            }
        }
        Ok(loss)
    }
}

struct Adam {
    m: Vec<f64>,
    v: Vec<f64>,
    t: i32,
}

impl Adam {
    const BETA1: f64 = 0.9;
    const BETA2: f64 = 0.999;
    const EPS: f64 = 1e-8;

    fn step(&mut self, theta: &mut [f64], grad: &[f64], lr: f64) {
        self.t += 1;
        let (c1, c2) = (
            1.0 - Self::BETA1.powi(self.t),
            1.0 - Self::BETA2.powi(self.t),
        );
        for k in 0..theta.len() {
            self.m[k] = Self::BETA1 * self.m[k] + (1.0 - Self::BETA1) * grad[k];
            self.v[k] = Self::BETA2 * self.v[k] + (1.0 - Self::BETA2) * grad[k] * grad[k];
            theta[k] -= lr * (self.m[k] / c1) / ((self.v[k] / c2).sqrt() + Self::EPS);
        }
    }
}

/// Minibatch Adam on the weighted cross-entropy. Per-sequence gradients are
/// computed in parallel and summed in index order, so results do not depend
/// on the thread count.
pub fn train_lstm(
    sequences: &[Vec<Vec<f64>>],
    y: &[bool],
    sample_weights: &[f64],
    cfg: &LstmConfig,
    seed: u64,
) -> Result<Lstm> {
    if sequences.is_empty() || sequences.len() != y.len() || y.len() != sample_weights.len() {
        return Err(Error::Training(
            "LSTM needs equally many sequences, labels and weights (>= 1)".into(),
        ));
    }
    if y.iter().all(|&l| l) || y.iter().all(|&l| !l) {
        return Err(Error::Training(
            "training labels contain a single class".into(),
        ));
    }
    if cfg.batch_size == 0 || !(cfg.learning_rate > 0.0) {
        return Err(Error::Training(
            "LSTM needs batch_size >= 1 and a positive learning rate".into(),
        ));
    }
    let channels = sequences[0].first().map_or(0, Vec::len);
    let mut model = Lstm::new(channels, cfg.hidden_size, seed)?;
    for s in sequences {
        model.check_sequence(s)?;
    }
    let n_params = model.n_params();
    let mut adam = Adam {
        m: vec![0.0; n_params],
        v: vec![0.0; n_params],
        t: 0,
    };
    let mut rng = ChaCha8Rng::seed_from_u64(crate::synth::derive_seed(seed, &[1]));
    let mut order: Vec<usize> = (0..sequences.len()).collect();
    for _ in 0..cfg.epochs {
        order.shuffle(&mut rng);
        for batch in order.chunks(cfg.batch_size) {
            let grads: Vec<Vec<f64>> = batch
                .par_iter()
                .map(|&i| {
                    let mut g = vec![0.0; n_params];
                    model
                        .accumulate_gradient(&sequences[i], y[i], sample_weights[i], &mut g)
                        .map(|_| g)
                })
                .collect::<Result<_>>()?;
            let mut grad = vec![0.0; n_params];
            for g in &grads {
                for (a, b) in grad.iter_mut().zip(g) {
                    *a += b;
                }
            }
            let scale = 1.0 / batch.len() as f64;
            grad.iter_mut().for_each(|v| *v *= scale);
            let norm = grad.iter().map(|v| v * v).sum::<f64>().sqrt();
            if norm > cfg.clip_norm && norm > 0.0 {
                let s = cfg.clip_norm / norm;
                grad.iter_mut().for_each(|v| *v *= s);
            }
            adam.step(&mut model.theta, &grad, cfg.learning_rate);
        }
    }
    Ok(model)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand_distr::StandardNormal;

    fn random_sequence(t: usize, c: usize, rng: &mut ChaCha8Rng) -> Vec<Vec<f64>> {
        (0..t)
            .map(|_| {
                (0..c)
                    .map(|_| rng.sample::<f64, _>(StandardNormal))
                    .collect()
            })
            .collect()
    }

    #[test]
    fn analytic_gradient_matches_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let model = Lstm::new(3, 8, 11).unwrap();
        let seq = random_sequence(20, 3, &mut rng);
        let mut grad = vec![0.0; model.n_params()];
        model
            .accumulate_gradient(&seq, true, 1.0, &mut grad)
            .unwrap();
        let eps = 1e-5;
        for (name, range) in model.param_blocks() {
            let (mut diff, mut norm) = (0.0f64, 0.0f64);
            for k in range {
                let mut plus = model.clone();
                plus.theta[k] += eps;
                let mut minus = model.clone();
                minus.theta[k] -= eps;
                let numeric = (plus.loss(&seq, true, 1.0).unwrap()
                    - minus.loss(&seq, true, 1.0).unwrap())
                    / (2.0 * eps);
                diff += (numeric - grad[k]).powi(2);
                norm = norm.max(numeric.abs()).max(grad[k].abs());
            }
            let rel = diff.sqrt() / norm.max(1e-12);
            assert!(rel <= 1e-4, "{name}: {rel}");
        }
    }

    #[test]
    fn zero_length_and_wrong_width_are_contract_errors() {
        let model = Lstm::new(3, 4, 0).unwrap();
        assert!(matches!(model.logit(&[]), Err(Error::Contract(_))));
        assert!(matches!(
            model.logit(&[vec![0.0; 2]]),
            Err(Error::Contract(_))
        ));
    }

    #[test]
    fn training_is_seed_deterministic() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let seqs: Vec<_> = (0..12).map(|_| random_sequence(5, 2, &mut rng)).collect();
        let y: Vec<bool> = (0..12).map(|i| i % 2 == 0).collect();
        let cfg = LstmConfig {
            hidden_size: 4,
            epochs: 3,
            ..LstmConfig::default()
        };
        let a = train_lstm(&seqs, &y, &[1.0; 12], &cfg, 5).unwrap();
        let b = train_lstm(&seqs, &y, &[1.0; 12], &cfg, 5).unwrap();
        assert_eq!(a, b);
    }
}
