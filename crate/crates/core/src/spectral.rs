//! Welch power spectral density estimation and band integration.

use rustfft::{num_complex::Complex64, FftPlanner};

/// One-sided power spectral density (units²/Hz) on a uniform frequency grid.
#[derive(Debug, Clone, PartialEq)]
pub struct Psd {
    pub freqs_hz: Vec<f64>,
    pub density: Vec<f64>,
}

impl Psd {
    pub fn resolution_hz(&self) -> f64 {
        if self.freqs_hz.len() > 1 {
            self.freqs_hz[1] - self.freqs_hz[0]
        } else {
            0.0
        }
    }

    /// Power in `[lo, hi)` Hz as a rectangle-rule sum over bins.
    pub fn band_power(&self, lo_hz: f64, hi_hz: f64) -> f64 {
        let df = self.resolution_hz();
        self.freqs_hz
            .iter()
            .zip(&self.density)
            .filter(|(f, _)| **f >= lo_hz && **f < hi_hz)
            .map(|(_, p)| p * df)
            .sum()
    }

    pub fn total_power(&self) -> f64 {
        self.density.iter().sum::<f64>() * self.resolution_hz()
    }
}

/// Periodic Hann window of length `n`.
pub fn hann(n: usize) -> Vec<f64> {
    (0..n)
        .map(|i| 0.5 - 0.5 * (2.0 * std::f64::consts::PI * i as f64 / n as f64).cos())
        .collect()
}

/// Welch estimate with a periodic Hann window, per-segment mean removal and
/// `overlap` samples shared between consecutive segments. A signal shorter
/// than `nperseg` is analysed as a single shorter segment.
pub fn welch(x: &[f64], fs: f64, nperseg: usize, overlap: usize) -> Psd {
    let nperseg = nperseg.min(x.len()).max(1);
    let step = nperseg.saturating_sub(overlap.min(nperseg - 1)).max(1);
    let window = hann(nperseg);
    let win_power: f64 = window.iter().map(|w| w * w).sum();
    let n_bins = nperseg / 2 + 1;
    let mut acc = vec![0.0; n_bins];
    let mut planner = FftPlanner::<f64>::new();
    let fft = planner.plan_fft_forward(nperseg);
    let mut buf = vec![Complex64::new(0.0, 0.0); nperseg];
    let mut segments = 0usize;
    let mut start = 0;
    while start + nperseg <= x.len() {
        let seg = &x[start..start + nperseg];
        let m = seg.iter().sum::<f64>() / nperseg as f64;
        for (b, (v, w)) in buf.iter_mut().zip(seg.iter().zip(&window)) {
            *b = Complex64::new((v - m) * w, 0.0);
        }
        fft.process(&mut buf);
        for (a, b) in acc.iter_mut().zip(&buf) {
            *a += b.norm_sqr();
        }
        segments += 1;
        start += step;
    }
    let scale = 1.0 / (fs * win_power * segments.max(1) as f64);
    let density: Vec<f64> = acc
        .iter()
        .enumerate()
        .map(|(k, p)| {
            let one_sided = if k == 0 || (nperseg.is_multiple_of(2) && k == n_bins - 1) {
                1.0
            } else {
                2.0
            };
            p * scale * one_sided
        })
        .collect();
    let freqs_hz = (0..n_bins)
        .map(|k| k as f64 * fs / nperseg as f64)
        .collect();
    Psd { freqs_hz, density }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn sine_power_is_preserved() {
        let fs = 1000.0;
        let x: Vec<f64> = (0..10_000)
            .map(|i| 2.0 * (2.0 * PI * 100.0 * i as f64 / fs).sin())
            .collect();
        let psd = welch(&x, fs, 1000, 500);
        // unit-amplitude sine has power 1/2, amplitude 2 -> 2
        assert!(
            (psd.total_power() - 2.0).abs() < 0.02,
            "{}",
            psd.total_power()
        );
        let peak = psd
            .density
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.total_cmp(b.1))
            .unwrap()
            .0;
        assert_eq!(psd.freqs_hz[peak], 100.0);
    }

    #[test]
    fn band_power_partitions() {
        let x: Vec<f64> = (0..4096)
            .map(|i| ((i * 7919) % 113) as f64 - 56.0)
            .collect();
        let psd = welch(&x, 256.0, 256, 128);
        let total = psd.total_power();
        let split = psd.band_power(0.0, 40.0) + psd.band_power(40.0, 200.0);
        assert!((total - split).abs() < 1e-9 * total.max(1.0));
    }
}
