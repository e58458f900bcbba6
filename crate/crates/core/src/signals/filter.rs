//! Butterworth and notch IIR design as cascades of second-order sections,
//! and (zero-phase) application of those cascades.

use std::f64::consts::PI;

use rustfft::num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::SampledSignal;
use crate::error::{Error, Result};

pub const MAX_BUTTERWORTH_ORDER: usize = 16;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FilterKind {
    Highpass,
    Lowpass,
    Bandpass,
    Bandstop,
}

/// What to build. For high/low-pass only `cutoff_low_hz` is used; band
/// filters use both edges. Band filters of order `n` have `2n` poles.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FilterSpec {
    pub kind: FilterKind,
    pub cutoff_low_hz: f64,
    pub cutoff_high_hz: f64,
    pub order: usize,
    pub zero_phase: bool,
}

impl FilterSpec {
    pub fn highpass(cutoff_hz: f64, order: usize) -> Self {
        Self {
            kind: FilterKind::Highpass,
            cutoff_low_hz: cutoff_hz,
            cutoff_high_hz: cutoff_hz,
            order,
            zero_phase: true,
        }
    }

    pub fn lowpass(cutoff_hz: f64, order: usize) -> Self {
        Self {
            kind: FilterKind::Lowpass,
            cutoff_low_hz: cutoff_hz,
            cutoff_high_hz: cutoff_hz,
            order,
            zero_phase: true,
        }
    }

    pub fn bandpass(low_hz: f64, high_hz: f64, order: usize) -> Self {
        Self {
            kind: FilterKind::Bandpass,
            cutoff_low_hz: low_hz,
            cutoff_high_hz: high_hz,
            order,
            zero_phase: true,
        }
    }

    pub fn bandstop(low_hz: f64, high_hz: f64, order: usize) -> Self {
        Self {
            kind: FilterKind::Bandstop,
            cutoff_low_hz: low_hz,
            cutoff_high_hz: high_hz,
            order,
            zero_phase: true,
        }
    }
}

/// One second-order section, `a0` normalized to 1:
/// `H(z) = (b0 + b1 z^-1 + b2 z^-2) / (1 + a1 z^-1 + a2 z^-2)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Biquad {
    pub b0: f64,
    pub b1: f64,
    pub b2: f64,
    pub a1: f64,
    pub a2: f64,
}

impl Biquad {
    pub fn response(&self, omega: f64) -> Complex64 {
        let z1 = Complex64::from_polar(1.0, -omega);
        let z2 = z1 * z1;
        (self.b0 + self.b1 * z1 + self.b2 * z2) / (1.0 + self.a1 * z1 + self.a2 * z2)
    }

    /// Roots of `z^2 + a1 z + a2`.
    pub fn poles(&self) -> [Complex64; 2] {
        let disc = Complex64::new(self.a1 * self.a1 - 4.0 * self.a2, 0.0).sqrt();
        [(-self.a1 + disc) / 2.0, (-self.a1 - disc) / 2.0]
    }

    pub fn is_stable(&self) -> bool {
        self.poles().iter().all(|p| p.norm() < 1.0)
    }

    /// Transposed direct-form II state `[s1, s2]` that a unit step would have
    /// settled into, and the DC gain of the section.
    fn unit_step_state(&self) -> ([f64; 2], f64) {
        let dc = (self.b0 + self.b1 + self.b2) / (1.0 + self.a1 + self.a2);
        let s2 = self.b2 - self.a2 * dc;
        let s1 = self.b1 - self.a1 * dc + s2;
        ([s1, s2], dc)
    }

    fn scaled(self, g: f64) -> Self {
        Self {
            b0: self.b0 * g,
            b1: self.b1 * g,
            b2: self.b2 * g,
            ..self
        }
    }
}

/// A realized IIR filter: sections applied in order, designed for
/// `sampling_rate_hz`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BiquadCascade {
    pub stages: Vec<Biquad>,
    pub sampling_rate_hz: f64,
}

impl BiquadCascade {
    /// Complex response at `freq_hz`.
    pub fn response(&self, freq_hz: f64) -> Complex64 {
        let omega = 2.0 * PI * freq_hz / self.sampling_rate_hz;
        self.stages
            .iter()
            .fold(Complex64::new(1.0, 0.0), |acc, s| acc * s.response(omega))
    }

    pub fn magnitude(&self, freq_hz: f64) -> f64 {
        self.response(freq_hz).norm()
    }

    pub fn magnitude_db(&self, freq_hz: f64) -> f64 {
        20.0 * self.magnitude(freq_hz).log10()
    }

    pub fn is_stable(&self) -> bool {
        self.stages.iter().all(Biquad::is_stable)
    }

    /// Number of taps an equivalent direct-form filter would have.
    pub fn effective_length(&self) -> usize {
        2 * self.stages.len() + 1
    }

    /// Samples until the slowest pole has decayed by `1e-6`.
    pub fn settling_length(&self) -> usize {
        let r = self
            .stages
            .iter()
            .flat_map(|s| s.poles())
            .map(|p| p.norm())
            .fold(0.0, f64::max);
        if r <= 0.0 {
            return 0;
        }
        if r >= 1.0 {
            return usize::MAX;
        }
        ((1e-6f64).ln() / r.ln()).ceil() as usize
    }

    /// Causal single pass with initial state scaled from `init`, the value
    /// the input is assumed to have held forever before the first sample.
    fn run(&self, data: &mut [f64], init: f64) {
        let mut gain = 1.0;
        for stage in &self.stages {
            let (unit, dc) = stage.unit_step_state();
            let mut s1 = unit[0] * gain * init;
            let mut s2 = unit[1] * gain * init;
            gain *= dc;
            let Biquad { b0, b1, b2, a1, a2 } = *stage;
            for v in data.iter_mut() {
                let x = *v;
                let y = b0 * x + s1;
                s1 = b1 * x - a1 * y + s2;
                s2 = b2 * x - a2 * y;
                *v = y;
            }
        }
    }

    /// Causal filtering of a raw slice, zero initial state.
    pub fn filter_causal(&self, data: &[f64]) -> Vec<f64> {
        let mut out = data.to_vec();
        self.run(&mut out, 0.0);
        out
    }

    /// Forward-backward filtering with steady-state initial conditions and
    /// odd-reflection edge padding long enough for the edge transient to
    /// settle (at least `3 * effective_length`, at most `n - 1` samples).
    pub fn filter_zero_phase(&self, data: &[f64]) -> Vec<f64> {
        let n = data.len();
        if n == 0 {
            return Vec::new();
        }
        let pad = (3 * self.effective_length())
            .max(self.settling_length())
            .min(n - 1);
        let mut ext = Vec::with_capacity(n + 2 * pad);
        let (first, last) = (data[0], data[n - 1]);
        ext.extend((1..=pad).rev().map(|i| 2.0 * first - data[i]));
        ext.extend_from_slice(data);
        ext.extend((1..=pad).map(|i| 2.0 * last - data[n - 1 - i]));

        let init = ext[0];
        self.run(&mut ext, init);
        ext.reverse();
        let init = ext[0];
        self.run(&mut ext, init);
        ext.reverse();
        ext[pad..pad + n].to_vec()
    }
}

fn check_cutoff(name: &str, f: f64, fs: f64) -> Result<()> {
    if !(f.is_finite() && f > 0.0) {
        return Err(Error::InvalidSpec(format!(
            "{name} {f} Hz must be positive"
        )));
    }
    if f >= fs / 2.0 {
        return Err(Error::InvalidSpec(format!(
            "{name} {f} Hz is not below the Nyquist frequency {} Hz",
            fs / 2.0
        )));
    }
    Ok(())
}

/// Bilinear-transform Butterworth design with pre-warped edges, realized as
/// second-order sections normalized to unit passband gain.
pub fn design_butterworth(spec: &FilterSpec, fs: f64) -> Result<BiquadCascade> {
    if !(fs.is_finite() && fs > 0.0) {
        return Err(Error::InvalidSpec(format!(
            "sampling rate {fs} Hz must be positive"
        )));
    }
    let n = spec.order;
    if n == 0 || n > MAX_BUTTERWORTH_ORDER {
        return Err(Error::InvalidSpec(format!(
            "order {n} outside [1, {MAX_BUTTERWORTH_ORDER}]"
        )));
    }
    let k = 2.0 * fs;
    let warp = |f: f64| k * (PI * f / fs).tan();
    let prototype: Vec<Complex64> = (0..n)
        .map(|i| Complex64::from_polar(1.0, PI * (2 * i + n + 1) as f64 / (2 * n) as f64))
        .collect();

    let (analog_poles, zero_kind, ref_omega): (Vec<Complex64>, Zeros, f64) = match spec.kind {
        FilterKind::Lowpass => {
            check_cutoff("low-pass cutoff", spec.cutoff_low_hz, fs)?;
            let wc = warp(spec.cutoff_low_hz);
            (
                prototype.iter().map(|p| p * wc).collect(),
                Zeros::Nyquist,
                0.0,
            )
        }
        FilterKind::Highpass => {
            check_cutoff("high-pass cutoff", spec.cutoff_low_hz, fs)?;
            let wc = warp(spec.cutoff_low_hz);
            (prototype.iter().map(|p| wc / p).collect(), Zeros::Dc, PI)
        }
        FilterKind::Bandpass | FilterKind::Bandstop => {
            check_cutoff("lower band edge", spec.cutoff_low_hz, fs)?;
            check_cutoff("upper band edge", spec.cutoff_high_hz, fs)?;
            if spec.cutoff_low_hz >= spec.cutoff_high_hz {
                return Err(Error::InvalidSpec(format!(
                    "band edges must satisfy low < high, got {} >= {}",
                    spec.cutoff_low_hz, spec.cutoff_high_hz
                )));
            }
            let (w1, w2) = (warp(spec.cutoff_low_hz), warp(spec.cutoff_high_hz));
            let w0 = (w1 * w2).sqrt();
            let bw = w2 - w1;
            let center = 2.0 * (w0 / k).atan();
            let mut poles = Vec::with_capacity(2 * n);
            for p in &prototype {
                // roots of s^2 - c s + w0^2 with c = p*bw (band-pass) or bw/p (band-stop)
                let c = if spec.kind == FilterKind::Bandpass {
                    p * bw
                } else {
                    bw / p
                };
                let disc = (c * c - 4.0 * w0 * w0).sqrt();
                poles.push((c + disc) / 2.0);
                poles.push((c - disc) / 2.0);
            }
            if spec.kind == FilterKind::Bandpass {
                (poles, Zeros::DcAndNyquist, center)
            } else {
                (poles, Zeros::Notch(center), 0.0)
            }
        }
    };

    let digital: Vec<Complex64> = analog_poles.iter().map(|s| (k + s) / (k - s)).collect();
    let stages = sections_from_poles(&digital, zero_kind, ref_omega);
    let cascade = BiquadCascade {
        stages,
        sampling_rate_hz: fs,
    };
    if !cascade.is_stable() {
        return Err(Error::InvalidSpec(format!(
            "{:?} design at {fs} Hz produced an unstable section",
            spec.kind
        )));
    }
    Ok(cascade)
}

#[derive(Clone, Copy)]
enum Zeros {
    /// z = -1 (low-pass)
    Nyquist,
    /// z = +1 (high-pass)
    Dc,
    /// one zero at each of z = +1 and z = -1 per section (band-pass)
    DcAndNyquist,
    /// conjugate pair on the unit circle at the given angle (band-stop)
    Notch(f64),
}

fn sections_from_poles(poles: &[Complex64], zeros: Zeros, ref_omega: f64) -> Vec<Biquad> {
    const IMAG_EPS: f64 = 1e-12;
    let mut complex: Vec<Complex64> = poles.iter().copied().filter(|p| p.im > IMAG_EPS).collect();
    let mut real: Vec<f64> = poles
        .iter()
        .filter(|p| p.im.abs() <= IMAG_EPS)
        .map(|p| p.re)
        .collect();
    complex.sort_by(|a, b| a.norm().total_cmp(&b.norm()));
    real.sort_by(|a, b| a.abs().total_cmp(&b.abs()));

    let mut denominators: Vec<(f64, f64, bool)> = Vec::new();
    for r in real.chunks(2) {
        match r {
            [r1, r2] => denominators.push((-(r1 + r2), r1 * r2, true)),
            [r1] => denominators.push((-r1, 0.0, false)),
            _ => unreachable!(),
        }
    }
    for p in &complex {
        denominators.push((-2.0 * p.re, p.norm_sqr(), true));
    }

    denominators
        .into_iter()
        .map(|(a1, a2, second_order)| {
            let (b0, b1, b2) = match (zeros, second_order) {
                (Zeros::Nyquist, true) => (1.0, 2.0, 1.0),
                (Zeros::Nyquist, false) => (1.0, 1.0, 0.0),
                (Zeros::Dc, true) => (1.0, -2.0, 1.0),
                (Zeros::Dc, false) => (1.0, -1.0, 0.0),
                (Zeros::DcAndNyquist, _) => (1.0, 0.0, -1.0),
                (Zeros::Notch(w), _) => (1.0, -2.0 * w.cos(), 1.0),
            };
            let raw = Biquad { b0, b1, b2, a1, a2 };
            raw.scaled(1.0 / raw.response(ref_omega).norm())
        })
        .collect()
}

/// Single-section notch at `f0_hz` with quality factor `q`.
pub fn design_notch(f0_hz: f64, q: f64, fs: f64) -> Result<BiquadCascade> {
    if !(fs.is_finite() && fs > 0.0) {
        return Err(Error::InvalidSpec(format!(
            "sampling rate {fs} Hz must be positive"
        )));
    }
    check_cutoff("notch frequency", f0_hz, fs)?;
    if !(q.is_finite() && q > 0.0) {
        return Err(Error::InvalidSpec(format!(
            "notch Q must be positive, got {q}"
        )));
    }
    let w0 = 2.0 * PI * f0_hz / fs;
    let alpha = w0.sin() / (2.0 * q);
    let a0 = 1.0 + alpha;
    let c = -2.0 * w0.cos();
    let stage = Biquad {
        b0: 1.0 / a0,
        b1: c / a0,
        b2: 1.0 / a0,
        a1: c / a0,
        a2: (1.0 - alpha) / a0,
    };
    Ok(BiquadCascade {
        stages: vec![stage],
        sampling_rate_hz: fs,
    })
}

/// Filters a signal, zero-phase (forward-backward) or causal.
pub fn apply_filter(
    signal: &SampledSignal,
    filter: &BiquadCascade,
    zero_phase: bool,
) -> Result<SampledSignal> {
    let fs = signal.sampling_rate_hz();
    if (fs - filter.sampling_rate_hz).abs() > 1e-9 * fs.max(1.0) {
        return Err(Error::Contract(format!(
            "{} sampled at {fs} Hz but filter designed for {} Hz",
            signal.channel(),
            filter.sampling_rate_hz
        )));
    }
    let out = if zero_phase {
        filter.filter_zero_phase(signal.samples())
    } else {
        filter.filter_causal(signal.samples())
    };
    signal.with_samples(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::signals::ChannelId;

    /// Steady-state amplitude of a causal filter's response to a unit sine,
    /// measured by least-squares fitting sin/cos over the settled tail.
    fn simulated_gain(c: &BiquadCascade, f: f64, seconds: f64) -> f64 {
        let fs = c.sampling_rate_hz;
        let n = (seconds * fs) as usize;
        let x: Vec<f64> = (0..n)
            .map(|i| (2.0 * PI * f * i as f64 / fs).sin())
            .collect();
        let mut y = x.clone();
        // plain direct-form I recursion, independent of the cascade runner
        for s in &c.stages {
            let (mut x1, mut x2, mut y1, mut y2) = (0.0, 0.0, 0.0, 0.0);
            for v in y.iter_mut() {
                let x0 = *v;
                let y0 = s.b0 * x0 + s.b1 * x1 + s.b2 * x2 - s.a1 * y1 - s.a2 * y2;
                x2 = x1;
                x1 = x0;
                y2 = y1;
                y1 = y0;
                *v = y0;
            }
        }
        let start = n / 2;
        let (mut ss, mut cc, mut sc, mut ys, mut yc) = (0.0, 0.0, 0.0, 0.0, 0.0);
        for (i, &yi) in y.iter().enumerate().skip(start) {
            let t = 2.0 * PI * f * i as f64 / fs;
            let (s, co) = t.sin_cos();
            ss += s * s;
            cc += co * co;
            sc += s * co;
            ys += yi * s;
            yc += yi * co;
        }
        let det = ss * cc - sc * sc;
        let a = (ys * cc - yc * sc) / det;
        let b = (yc * ss - ys * sc) / det;
        (a * a + b * b).sqrt()
    }

    #[test]
    fn highpass_blocks_dc() {
        let c = design_butterworth(&FilterSpec::highpass(0.5, 4), 250.0).unwrap();
        assert!(c.magnitude(0.0) < 1e-6);
        assert!(c.is_stable());
        assert!((c.magnitude_db(0.5) + 3.0103).abs() < 0.5);
    }

    #[test]
    fn lowpass_cutoff_is_minus_3_db() {
        let c = design_butterworth(&FilterSpec::lowpass(3.0, 4), 250.0).unwrap();
        let db = c.magnitude_db(3.0);
        assert!((db + 3.0).abs() <= 0.5, "{db}");
        let simulated = 20.0 * simulated_gain(&c, 3.0, 40.0).log10();
        assert!((simulated + 3.0).abs() <= 0.5, "{simulated}");
        // frequency-grid scan: monotone decreasing magnitude for a low-pass
        let grid: Vec<f64> = (0..=1000).map(|i| i as f64 * 0.1).collect();
        for w in grid.windows(2) {
            assert!(c.magnitude(w[1]) <= c.magnitude(w[0]) + 1e-12);
        }
    }

    #[test]
    fn nyquist_violation_is_rejected() {
        let err = design_butterworth(&FilterSpec::lowpass(3.0, 4), 4.0).unwrap_err();
        assert!(matches!(err, Error::InvalidSpec(_)));
        assert!(design_butterworth(&FilterSpec::lowpass(3.0, 0), 250.0).is_err());
        assert!(design_butterworth(&FilterSpec::lowpass(3.0, 17), 250.0).is_err());
        assert!(design_butterworth(&FilterSpec::bandpass(15.0, 5.0, 4), 250.0).is_err());
        assert!(matches!(
            design_notch(50.0, 30.0, 80.0),
            Err(Error::InvalidSpec(_))
        ));
    }

    #[test]
    fn every_design_is_stable_and_hits_its_edges() {
        for fs in [128.0, 250.0, 256.0, 1000.0] {
            for order in 1..=8 {
                for spec in [
                    FilterSpec::lowpass(3.0, order),
                    FilterSpec::highpass(0.5, order),
                    FilterSpec::bandpass(5.0, 15.0, order),
                    FilterSpec::bandpass(0.5, 4.0, order),
                    FilterSpec::bandstop(48.0, 62.0, order),
                ] {
                    let c = design_butterworth(&spec, fs).unwrap();
                    for s in &c.stages {
                        for p in s.poles() {
                            assert!(p.norm() < 1.0, "{spec:?} fs={fs} pole {p}");
                        }
                    }
                    let edge_db = c.magnitude_db(spec.cutoff_low_hz);
                    assert!((edge_db + 3.0).abs() <= 0.5, "{spec:?} fs={fs}: {edge_db}");
                    if matches!(spec.kind, FilterKind::Bandpass | FilterKind::Bandstop) {
                        let hi_db = c.magnitude_db(spec.cutoff_high_hz);
                        assert!((hi_db + 3.0).abs() <= 0.5, "{spec:?} fs={fs}: {hi_db}");
                    }
                }
            }
        }
    }

    #[test]
    fn odd_order_uses_first_order_section() {
        let c = design_butterworth(&FilterSpec::lowpass(10.0, 3), 250.0).unwrap();
        assert_eq!(c.stages.len(), 2);
        assert!(c.stages.iter().any(|s| s.a2 == 0.0 && s.b2 == 0.0));
        let sim = simulated_gain(&c, 10.0, 10.0);
        assert!((sim - c.magnitude(10.0)).abs() < 1e-3);
    }

    #[test]
    fn notch_gain_profile() {
        for fs in [128.0, 250.0, 256.0] {
            let c = design_notch(50.0, 30.0, fs).unwrap();
            assert!(c.magnitude_db(50.0) <= -40.0);
            assert!(c.magnitude_db(5.0) >= -1.0);
            assert!(c.is_stable());
        }
    }

    #[test]
    fn zero_input_gives_zero_output() {
        let c = design_butterworth(&FilterSpec::highpass(0.5, 4), 250.0).unwrap();
        let s = SampledSignal::new(ChannelId::Ecg, 250.0, 0.0, vec![0.0; 1000]).unwrap();
        for zp in [true, false] {
            let out = apply_filter(&s, &c, zp).unwrap();
            assert!(out.samples().iter().all(|&v| v == 0.0));
        }
    }

    #[test]
    fn constant_through_highpass_is_removed() {
        let fs = 250.0;
        let c = design_butterworth(&FilterSpec::highpass(0.5, 4), fs).unwrap();
        let s = SampledSignal::new(ChannelId::Ecg, fs, 0.0, vec![1.0; 2500]).unwrap();
        let out = apply_filter(&s, &c, true).unwrap();
        let interior = &out.samples()[250..2250];
        let mean = interior.iter().sum::<f64>() / interior.len() as f64;
        assert!(mean.abs() < 1e-3, "{mean}");
    }

    #[test]
    fn zero_phase_keeps_pulse_position() {
        let fs = 250.0;
        let c = design_butterworth(&FilterSpec::lowpass(10.0, 4), fs).unwrap();
        let x: Vec<f64> = (0..1000)
            .map(|i| (-((i as f64 - 500.0) / 8.0).powi(2)).exp())
            .collect();
        let s = SampledSignal::new(ChannelId::Ecg, fs, 0.0, x).unwrap();
        let y = apply_filter(&s, &c, true).unwrap();
        // lag of the cross-correlation maximum between input and output
        let (xs, ys) = (s.samples(), y.samples());
        let lag = (-20i64..=20)
            .max_by(|&a, &b| {
                let cc = |l: i64| -> f64 {
                    (40..960).map(|i| xs[i] * ys[(i as i64 + l) as usize]).sum()
                };
                cc(a).total_cmp(&cc(b))
            })
            .unwrap();
        assert!(lag.abs() <= 1, "lag {lag}");
        let peak = ys
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.total_cmp(b.1))
            .unwrap()
            .0;
        assert!((peak as i64 - 500).abs() <= 1);
        // a causal pass does shift the pulse
        let causal = apply_filter(&s, &c, false).unwrap();
        let causal_peak = causal
            .samples()
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.total_cmp(b.1))
            .unwrap()
            .0;
        assert!(causal_peak > 502);
    }

    #[test]
    fn rate_mismatch_is_a_contract_error() {
        let c = design_butterworth(&FilterSpec::lowpass(3.0, 4), 250.0).unwrap();
        let s = SampledSignal::new(ChannelId::Eda, 128.0, 0.0, vec![0.0; 10]).unwrap();
        assert!(matches!(
            apply_filter(&s, &c, true),
            Err(Error::Contract(_))
        ));
    }

    #[test]
    fn short_inputs_are_handled() {
        let c = design_butterworth(&FilterSpec::lowpass(3.0, 4), 250.0).unwrap();
        assert_eq!(c.filter_zero_phase(&[2.0]), vec![2.0]);
        assert_eq!(c.filter_zero_phase(&[]).len(), 0);
        let y = c.filter_zero_phase(&[1.0, 1.0, 1.0]);
        assert!(y.iter().all(|v| (v - 1.0).abs() < 1e-9));
    }
}
