//! Deterministic synthetic signals and studies with exact ground truth.
//!
//! Every generator draws from ChaCha8 (`rand_chacha::ChaCha8Rng`), seeded
//! through a SplitMix64 mix of the master seed and the block coordinates, so
//! output is bit-identical across platforms for a given seed.
//!
//! * ECG: Gaussian-mixture P/Q/R/S/T beat template placed on an RR sequence
//!   `base + depth * sin(2 pi f t) + N(0, sd)`.
//! * EDA: tonic line plus Bateman-shaped SCRs at Poisson (or regular) onsets.
//! * EMG: Gaussian noise with a flat spectrum on `[0.5 m, 1.5 m]` (median
//!   frequency `m`), normalized to the requested RMS.
//! * EEG: per-band Gaussian noise occupying the central half of each band,
//!   mixed with the requested power weights.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp, Normal, StandardNormal};
use rustfft::{num_complex::Complex64, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::dataset::{
    ChannelEntry, LabelPolicy, Manifest, ReadingEntry, RecordingBlock, Session, SessionEntry,
    SubjectEntry, TaskTag, Vas, VasEntry,
};
use crate::eeg::Band;
use crate::error::{Error, Result};
use crate::signals::{ChannelId, SampledSignal};

/// SplitMix64 finalizer over the master seed and a coordinate path.
pub fn derive_seed(master: u64, path: &[u64]) -> u64 {
    fn mix(mut z: u64) -> u64 {
        z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^ (z >> 31)
    }
    path.iter().fold(mix(master), |acc, &p| mix(acc ^ mix(p)))
}

fn rng_for(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn gauss(rng: &mut ChaCha8Rng) -> f64 {
    StandardNormal.sample(rng)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EcgParams {
    pub hr_bpm: f64,
    pub rr_sd_ms: f64,
    pub rr_mod_freq_hz: f64,
    pub rr_mod_depth_ms: f64,
    /// Peak-to-peak amplitude of a 0.25 Hz respiratory baseline wander.
    pub baseline_wander: f64,
    /// Standard deviation of additive white noise.
    pub noise_sd: f64,
}

impl Default for EcgParams {
    fn default() -> Self {
        Self {
            hr_bpm: 60.0,
            rr_sd_ms: 0.0,
            rr_mod_freq_hz: 0.25,
            rr_mod_depth_ms: 0.0,
            baseline_wander: 0.0,
            noise_sd: 0.0,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct EcgTruth {
    pub r_peak_times_s: Vec<f64>,
    pub rr_intervals_ms: Vec<f64>,
}

/// (offset s, amplitude, width s) of the P, Q, R, S, T waves relative to R.
const BEAT_TEMPLATE: [(f64, f64, f64); 5] = [
    (-0.20, 0.12, 0.025),
    (-0.025, -0.15, 0.010),
    (0.0, 1.0, 0.010),
    (0.025, -0.25, 0.010),
    (0.25, 0.30, 0.050),
];

pub fn gen_ecg(
    params: &EcgParams,
    fs: f64,
    duration_s: f64,
    seed: u64,
) -> Result<(SampledSignal, EcgTruth)> {
    if !(30.0..=220.0).contains(&params.hr_bpm) {
        return Err(Error::Data(format!(
            "heart rate {} bpm outside [30, 220]",
            params.hr_bpm
        )));
    }
    if params.rr_sd_ms < 0.0 || params.rr_mod_depth_ms < 0.0 || params.noise_sd < 0.0 {
        return Err(Error::Data(
            "ECG variability parameters must be >= 0".into(),
        ));
    }
    check_duration(fs, duration_s)?;
    let mut rng = rng_for(seed);
    let base_ms = 60_000.0 / params.hr_bpm;
    let n = (duration_s * fs).round() as usize;

    let mut beats = Vec::new();
    let mut t = 0.3 + rng.random::<f64>() * 0.3;
    while t < duration_s {
        beats.push(t);
        let jitter = if params.rr_sd_ms > 0.0 {
            params.rr_sd_ms * gauss(&mut rng)
        } else {
            0.0
        };
        let rr = base_ms
            + params.rr_mod_depth_ms * (2.0 * PI * params.rr_mod_freq_hz * t).sin()
            + jitter;
        t += rr.clamp(250.0, 2500.0) / 1000.0;
    }
    let mut x = vec![0.0; n];
    for (k, &r) in beats.iter().enumerate() {
        // P and T waves scale with the surrounding RR (Bazett-like)
        let rr_s = beats.get(k + 1).map_or(base_ms / 1000.0, |next| next - r);
        let stretch = rr_s.sqrt();
        for &(offset, amp, width) in &BEAT_TEMPLATE {
            let center = r + if offset.abs() > 0.1 {
                offset * stretch
            } else {
                offset
            };
            let lo = ((center - 5.0 * width) * fs).floor().max(0.0) as usize;
            let hi = (((center + 5.0 * width) * fs).ceil().max(0.0) as usize).min(n);
            for (i, v) in x.iter_mut().enumerate().take(hi).skip(lo) {
                let dt = i as f64 / fs - center;
                *v += amp * (-0.5 * (dt / width).powi(2)).exp();
            }
        }
    }
    if params.baseline_wander > 0.0 || params.noise_sd > 0.0 {
        let phase = rng.random::<f64>() * 2.0 * PI;
        for (i, v) in x.iter_mut().enumerate() {
            let ti = i as f64 / fs;
            *v += 0.5 * params.baseline_wander * (2.0 * PI * 0.25 * ti + phase).sin();
            if params.noise_sd > 0.0 {
                *v += params.noise_sd * gauss(&mut rng);
            }
        }
    }
    let rr_intervals_ms = beats.windows(2).map(|w| (w[1] - w[0]) * 1000.0).collect();
    let truth = EcgTruth {
        r_peak_times_s: beats,
        rr_intervals_ms,
    };
    Ok((SampledSignal::new(ChannelId::Ecg, fs, 0.0, x)?, truth))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ScrSchedule {
    /// Exponential inter-onset gaps after a `min_gap_s` dead time, with the
    /// mean gap matching `scr_rate_per_min`.
    Poisson { min_gap_s: f64 },
    /// Onsets at `first_s + k * spacing_s`.
    Regular { first_s: f64, spacing_s: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EdaParams {
    pub tonic_level_us: f64,
    /// µS per second.
    pub tonic_slope: f64,
    pub scr_rate_per_min: f64,
    pub scr_amp_us: f64,
    pub schedule: ScrSchedule,
    pub noise_sd: f64,
}

impl Default for EdaParams {
    fn default() -> Self {
        Self {
            tonic_level_us: 5.0,
            tonic_slope: 0.0,
            scr_rate_per_min: 5.0,
            scr_amp_us: 0.5,
            schedule: ScrSchedule::Poisson { min_gap_s: 3.0 },
            noise_sd: 0.0,
        }
    }
}

/// SCR rise and decay time constants of the Bateman kernel.
pub const SCR_TAU_RISE_S: f64 = 0.75;
pub const SCR_TAU_DECAY_S: f64 = 2.0;

/// Time from SCR onset to its peak for the kernel above.
pub fn scr_time_to_peak_s() -> f64 {
    let (r, d) = (SCR_TAU_RISE_S, SCR_TAU_DECAY_S);
    (d / r).ln() * r * d / (d - r)
}

/// Bateman kernel normalized to a unit peak; zero before the onset.
pub fn scr_kernel(dt: f64) -> f64 {
    if dt <= 0.0 {
        return 0.0;
    }
    let peak = {
        let tp = scr_time_to_peak_s();
        (-tp / SCR_TAU_DECAY_S).exp() - (-tp / SCR_TAU_RISE_S).exp()
    };
    ((-dt / SCR_TAU_DECAY_S).exp() - (-dt / SCR_TAU_RISE_S).exp()) / peak
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct EdaTruth {
    pub scr_onset_times_s: Vec<f64>,
    pub scr_peak_times_s: Vec<f64>,
    pub scr_amplitudes_us: Vec<f64>,
}

pub fn gen_eda(
    params: &EdaParams,
    fs: f64,
    duration_s: f64,
    seed: u64,
) -> Result<(SampledSignal, EdaTruth)> {
    if params.tonic_level_us < 0.0
        || params.scr_rate_per_min < 0.0
        || params.scr_amp_us < 0.0
        || params.noise_sd < 0.0
    {
        return Err(Error::Data("EDA levels and rates must be >= 0".into()));
    }
    check_duration(fs, duration_s)?;
    let mut rng = rng_for(seed);
    let mut onsets = Vec::new();
    match params.schedule {
        ScrSchedule::Poisson { min_gap_s } => {
            if params.scr_rate_per_min > 0.0 {
                // dead time plus exponential gap keeps the mean rate on target
                let mean_gap = 60.0 / params.scr_rate_per_min;
                let dead = min_gap_s.clamp(0.0, 0.5 * mean_gap);
                let gaps = Exp::new(1.0 / (mean_gap - dead))
                    .map_err(|e| Error::Data(format!("SCR rate: {e}")))?;
                let mut t = gaps.sample(&mut rng);
                while t < duration_s {
                    onsets.push(t);
                    t += dead + gaps.sample(&mut rng);
                }
            }
        }
        ScrSchedule::Regular { first_s, spacing_s } => {
            if spacing_s <= 0.0 {
                return Err(Error::Data("SCR spacing must be positive".into()));
            }
            let mut t = first_s;
            while t < duration_s {
                onsets.push(t);
                t += spacing_s;
            }
        }
    }
    let n = (duration_s * fs).round() as usize;
    let mut x: Vec<f64> = (0..n)
        .map(|i| params.tonic_level_us + params.tonic_slope * i as f64 / fs)
        .collect();
    for &onset in &onsets {
        let lo = (onset * fs).floor().max(0.0) as usize;
        let hi = (((onset + 12.0 * SCR_TAU_DECAY_S) * fs).ceil() as usize).min(n);
        for (i, v) in x.iter_mut().enumerate().take(hi).skip(lo) {
            *v += params.scr_amp_us * scr_kernel(i as f64 / fs - onset);
        }
    }
    if params.noise_sd > 0.0 {
        x.iter_mut()
            .for_each(|v| *v += params.noise_sd * gauss(&mut rng));
    }
    let tp = scr_time_to_peak_s();
    let truth = EdaTruth {
        scr_peak_times_s: onsets.iter().map(|t| t + tp).collect(),
        scr_amplitudes_us: vec![params.scr_amp_us; onsets.len()],
        scr_onset_times_s: onsets,
    };
    Ok((SampledSignal::new(ChannelId::Eda, fs, 0.0, x)?, truth))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmgParams {
    pub rms_level: f64,
    pub median_freq_hz: f64,
}

impl Default for EmgParams {
    fn default() -> Self {
        Self {
            rms_level: 1.0,
            median_freq_hz: 100.0,
        }
    }
}

/// Zero-mean Gaussian noise whose spectrum is flat on `[lo, hi]` Hz,
/// normalized to unit RMS.
pub fn band_limited_noise(
    n: usize,
    fs: f64,
    lo_hz: f64,
    hi_hz: f64,
    rng: &mut ChaCha8Rng,
) -> Vec<f64> {
    let mut spectrum = vec![Complex64::new(0.0, 0.0); n];
    let df = fs / n as f64;
    for k in 1..n.div_ceil(2) {
        let f = k as f64 * df;
        if f >= lo_hz && f <= hi_hz {
            let c = Complex64::new(gauss(rng), gauss(rng));
            spectrum[k] = c;
            spectrum[n - k] = c.conj();
        }
    }
    let mut planner = FftPlanner::<f64>::new();
    planner.plan_fft_inverse(n).process(&mut spectrum);
    let mut x: Vec<f64> = spectrum.iter().map(|c| c.re).collect();
    let rms = (x.iter().map(|v| v * v).sum::<f64>() / n as f64).sqrt();
    if rms > 0.0 {
        x.iter_mut().for_each(|v| *v /= rms);
    }
    x
}

pub fn gen_emg(
    params: &EmgParams,
    fs: f64,
    duration_s: f64,
    seed: u64,
) -> Result<(SampledSignal, f64)> {
    if params.rms_level < 0.0 || params.median_freq_hz <= 0.0 {
        return Err(Error::Data(
            "EMG RMS must be >= 0 and median frequency > 0".into(),
        ));
    }
    check_duration(fs, duration_s)?;
    let nyq = fs / 2.0;
    let (lo, hi) = (
        0.5 * params.median_freq_hz,
        (1.5 * params.median_freq_hz).min(0.98 * nyq),
    );
    if lo >= hi {
        return Err(Error::Data(format!(
            "EMG median frequency {} Hz too close to Nyquist {nyq} Hz",
            params.median_freq_hz
        )));
    }
    let mut rng = rng_for(seed);
    let n = (duration_s * fs).round() as usize;
    let x: Vec<f64> = band_limited_noise(n, fs, lo, hi, &mut rng)
        .into_iter()
        .map(|v| v * params.rms_level)
        .collect();
    Ok((
        SampledSignal::new(ChannelId::Emg, fs, 0.0, x)?,
        0.5 * (lo + hi),
    ))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EegParams {
    /// Relative power per band (delta, theta, alpha, beta, gamma); sums to 1.
    pub band_weights: [f64; 5],
    pub rms_uv: f64,
}

impl Default for EegParams {
    fn default() -> Self {
        Self {
            band_weights: [0.25, 0.15, 0.3, 0.2, 0.1],
            rms_uv: 10.0,
        }
    }
}

pub fn gen_eeg(
    params: &EegParams,
    channel: ChannelId,
    fs: f64,
    duration_s: f64,
    seed: u64,
) -> Result<SampledSignal> {
    if !channel.is_eeg() {
        return Err(Error::Contract(format!("{channel} is not an EEG channel")));
    }
    let total: f64 = params.band_weights.iter().sum();
    if params.band_weights.iter().any(|w| *w < 0.0) || (total - 1.0).abs() > 1e-6 {
        return Err(Error::Data(format!(
            "EEG band weights must be >= 0 and sum to 1, got {:?}",
            params.band_weights
        )));
    }
    check_duration(fs, duration_s)?;
    let mut rng = rng_for(seed);
    let n = (duration_s * fs).round() as usize;
    let mut x = vec![0.0; n];
    for (band, &w) in Band::ALL.iter().zip(&params.band_weights) {
        let (lo, hi) = band.edges_for(fs);
        let quarter = (hi - lo) / 4.0;
        let component = band_limited_noise(n, fs, lo + quarter, hi - quarter, &mut rng);
        let gain = params.rms_uv * w.sqrt();
        for (v, c) in x.iter_mut().zip(component) {
            *v += gain * c;
        }
    }
    SampledSignal::new(channel, fs, 0.0, x)
}

fn check_duration(fs: f64, duration_s: f64) -> Result<()> {
    if !(fs > 0.0 && duration_s > 0.0 && (duration_s * fs).round() >= 1.0) {
        return Err(Error::Data(format!(
            "invalid synthetic length: fs {fs} Hz, duration {duration_s} s"
        )));
    }
    Ok(())
}

/// Per-channel parameters for a single synthetic recording.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthConfig {
    pub seed: u64,
    pub duration_s: f64,
    pub rates: ChannelRates,
    pub ecg: EcgParams,
    pub eda: EdaParams,
    pub emg: EmgParams,
    pub eeg: EegParams,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            duration_s: 60.0,
            rates: ChannelRates::default(),
            ecg: EcgParams::default(),
            eda: EdaParams::default(),
            emg: EmgParams::default(),
            eeg: EegParams::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChannelRates {
    pub ecg_hz: f64,
    pub eda_hz: f64,
    pub emg_hz: f64,
    pub eeg_hz: f64,
}

impl Default for ChannelRates {
    fn default() -> Self {
        Self {
            ecg_hz: 250.0,
            eda_hz: 32.0,
            emg_hz: 500.0,
            eeg_hz: 256.0,
        }
    }
}

impl ChannelRates {
    pub fn rate(&self, channel: ChannelId) -> f64 {
        match channel {
            ChannelId::Ecg => self.ecg_hz,
            ChannelId::Eda => self.eda_hz,
            ChannelId::Emg => self.emg_hz,
            _ => self.eeg_hz,
        }
    }
}

/// What the generator knows about one recording.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct GroundTruth {
    pub ecg: EcgTruth,
    pub eda: EdaTruth,
    pub emg_median_freq_hz: f64,
    pub eeg_band_weights: [f64; 5],
    pub rr_mod_freq_hz: f64,
}

/// All seven channels for one recording.
pub fn generate(config: &SynthConfig) -> Result<(BTreeMap<ChannelId, SampledSignal>, GroundTruth)> {
    let d = config.duration_s;
    let r = &config.rates;
    let (ecg, ecg_truth) = gen_ecg(&config.ecg, r.ecg_hz, d, derive_seed(config.seed, &[1]))?;
    let (eda, eda_truth) = gen_eda(&config.eda, r.eda_hz, d, derive_seed(config.seed, &[2]))?;
    let (emg, emg_median) = gen_emg(&config.emg, r.emg_hz, d, derive_seed(config.seed, &[3]))?;
    let mut signals = BTreeMap::new();
    signals.insert(ChannelId::Ecg, ecg);
    signals.insert(ChannelId::Eda, eda);
    signals.insert(ChannelId::Emg, emg);
    for (i, ch) in ChannelId::EEG.into_iter().enumerate() {
        let s = gen_eeg(
            &config.eeg,
            ch,
            r.eeg_hz,
            d,
            derive_seed(config.seed, &[4, i as u64]),
        )?;
        signals.insert(ch, s);
    }
    Ok((
        signals,
        GroundTruth {
            ecg: ecg_truth,
            eda: eda_truth,
            emg_median_freq_hz: emg_median,
            eeg_band_weights: config.eeg.band_weights,
            rr_mod_freq_hz: config.ecg.rr_mod_freq_hz,
        },
    ))
}

/// Effect magnitudes applied to fatigue-positive blocks; 1.0 is the default
/// strength, 0.0 removes every difference between conditions.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EffectSizes {
    pub cf: f64,
    pub pf: f64,
}

impl Default for EffectSizes {
    fn default() -> Self {
        Self { cf: 1.0, pf: 1.0 }
    }
}

impl EffectSizes {
    pub fn none() -> Self {
        Self { cf: 0.0, pf: 0.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StudyConfig {
    pub n_subjects: usize,
    pub block_duration_s: f64,
    pub rates: ChannelRates,
    pub effect: EffectSizes,
    pub seed: u64,
}

impl Default for StudyConfig {
    fn default() -> Self {
        Self {
            n_subjects: 32,
            block_duration_s: 60.0,
            rates: ChannelRates::default(),
            effect: EffectSizes::default(),
            seed: 0,
        }
    }
}

pub const SESSIONS: [Session; 2] = [Session::Morning, Session::Evening];
pub const READINGS_PER_SESSION: u8 = 5;

/// Task that precedes each reading.
pub fn task_for(session: Session, reading: u8) -> TaskTag {
    match (session, reading) {
        (_, 1) => TaskTag::Baseline,
        (_, 3) => TaskTag::TreadmillRest,
        (_, 4) => TaskTag::TwoBack,
        (Session::Evening, 2) => TaskTag::TwoBack,
        _ => TaskTag::ZeroBack,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlockTruth {
    pub subject_id: String,
    pub session: Session,
    pub reading_index: u8,
    pub cf_label: bool,
    /// `None` for readings excluded from physical-fatigue analysis.
    pub pf_label: Option<bool>,
    pub config: SynthConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StudyTruth {
    pub blocks: Vec<BlockTruth>,
}

pub struct Study {
    pub blocks: Vec<RecordingBlock>,
    pub truth: StudyTruth,
}

pub fn subject_id(index: usize) -> String {
    format!("S{:02}", index + 1)
}

struct SubjectBaseline {
    hr: f64,
    rr_sd: f64,
    rr_mod_freq: f64,
    tonic: f64,
    scr_rate: f64,
    scr_amp: f64,
    emg_rms: f64,
    emg_median: f64,
    eeg_weights: [f64; 5],
}

impl SubjectBaseline {
    fn draw(rng: &mut ChaCha8Rng) -> Self {
        let mut g = |mean: f64, sd: f64| mean + sd * gauss(rng);
        let hr = g(70.0, 5.0).clamp(55.0, 90.0);
        let rr_sd = g(40.0, 6.0).clamp(20.0, 60.0);
        let rr_mod_freq = g(0.25, 0.02).clamp(0.18, 0.35);
        let tonic = g(5.0, 1.0).clamp(1.0, 10.0);
        let scr_rate = g(3.0, 0.4).clamp(1.5, 5.0);
        let scr_amp = g(0.3, 0.05).clamp(0.15, 0.5);
        let emg_rms = g(1.0, 0.1).clamp(0.6, 1.5);
        let emg_median = g(100.0, 6.0).clamp(80.0, 120.0);
        let base = EegParams::default().band_weights;
        let mut w = [0.0; 5];
        for (wi, bi) in w.iter_mut().zip(base) {
            *wi = bi * g(1.0, 0.06).clamp(0.8, 1.2);
        }
        Self {
            hr,
            rr_sd,
            rr_mod_freq,
            tonic,
            scr_rate,
            scr_amp,
            emg_rms,
            emg_median,
            eeg_weights: normalize(w),
        }
    }
}

fn normalize(mut w: [f64; 5]) -> [f64; 5] {
    let s: f64 = w.iter().sum();
    w.iter_mut().for_each(|v| *v /= s);
    w
}

/// Block parameters for one reading, including fatigue effects.
fn block_config(
    base: &SubjectBaseline,
    cfg: &StudyConfig,
    cf: bool,
    pf: bool,
    seed: u64,
) -> SynthConfig {
    let mut rng = rng_for(derive_seed(seed, &[0xB10C]));
    let mut jitter = |sd: f64| 1.0 + sd * gauss(&mut rng);
    let (ecf, epf) = (
        if cf { cfg.effect.cf.max(0.0) } else { 0.0 },
        if pf { cfg.effect.pf.max(0.0) } else { 0.0 },
    );
    let hr = (base.hr * jitter(0.02) + 25.0 * epf + 4.0 * ecf).clamp(40.0, 200.0);
    let rr_sd =
        base.rr_sd * jitter(0.05) * (1.0 - 0.4 * epf).max(0.2) * (1.0 - 0.25 * ecf).max(0.3);
    let scr_rate = base.scr_rate * jitter(0.05) * (1.0 + 0.6 * epf + 0.5 * ecf);
    let emg_median = base.emg_median * jitter(0.02) * (1.0 - 0.2 * epf).max(0.4);
    let emg_rms = base.emg_rms * jitter(0.03) * (1.0 + 0.3 * epf);
    let mut w = base.eeg_weights;
    w[1] += 0.15 * ecf;
    w[2] = (w[2] - 0.08 * ecf).max(0.02);
    for v in w.iter_mut() {
        *v *= jitter(0.03).max(0.5);
    }
    let tonic_level_us = base.tonic * jitter(0.03);
    let scr_amp_us = base.scr_amp * jitter(0.05);
    let eeg_rms = 10.0 * jitter(0.05);
    let tonic_slope = 0.002 * gauss(&mut rng);
    SynthConfig {
        seed,
        duration_s: cfg.block_duration_s,
        rates: cfg.rates,
        ecg: EcgParams {
            hr_bpm: hr,
            rr_sd_ms: rr_sd,
            rr_mod_freq_hz: base.rr_mod_freq,
            rr_mod_depth_ms: 0.5 * rr_sd,
            baseline_wander: 0.1,
            noise_sd: 0.02,
        },
        eda: EdaParams {
            tonic_level_us,
            tonic_slope,
            scr_rate_per_min: scr_rate,
            scr_amp_us,
            schedule: ScrSchedule::Poisson { min_gap_s: 3.0 },
            noise_sd: 0.002,
        },
        emg: EmgParams {
            rms_level: emg_rms,
            median_freq_hz: emg_median,
        },
        eeg: EegParams {
            band_weights: normalize(w),
            rms_uv: eeg_rms,
        },
    }
}

fn synth_vas(rng: &mut ChaCha8Rng, cf: bool, pf: bool, reading: u8) -> Vas {
    let noise = Normal::new(0.0, 1.0).expect("unit normal");
    let mut score = |level: f64| (level + noise.sample(rng)).round().clamp(1.0, 10.0) as u8;
    let drift = reading as f64 * 0.4;
    Vas {
        tiredness: score(2.5 + drift + if cf || pf { 2.0 } else { 0.0 }),
        physical: score(2.0 + if pf { 5.0 } else { 0.5 * drift }),
        cognitive: score(2.0 + drift + if cf { 4.0 } else { 0.0 }),
        sleepiness: score(2.5 + 0.5 * drift),
    }
}

/// Builds the full synthetic study in memory: `n_subjects` x 2 sessions x 5
/// readings.
pub fn gen_study(cfg: &StudyConfig) -> Result<Study> {
    use rayon::prelude::*;

    if cfg.n_subjects < 3 {
        return Err(Error::Data(format!(
            "a study needs >= 3 subjects, got {}",
            cfg.n_subjects
        )));
    }
    let cf_policy = LabelPolicy::cognitive();
    let pf_policy = LabelPolicy::physical();
    let per_subject: Vec<Result<Vec<(RecordingBlock, BlockTruth)>>> = (0..cfg.n_subjects)
        .into_par_iter()
        .map(|s| {
            let mut rng = rng_for(derive_seed(cfg.seed, &[s as u64]));
            let base = SubjectBaseline::draw(&mut rng);
            let mut out = Vec::new();
            for (si, &session) in SESSIONS.iter().enumerate() {
                for reading in 1..=READINGS_PER_SESSION {
                    let cf = cf_policy.label_for(reading) == Some(true);
                    let pf_label = pf_policy.label_for(reading);
                    let pf = pf_label == Some(true);
                    let seed = derive_seed(cfg.seed, &[s as u64, si as u64, reading as u64]);
                    let config = block_config(&base, cfg, cf, pf, seed);
                    let (signals, _) = generate(&config)?;
                    let block = RecordingBlock {
                        subject_id: subject_id(s),
                        session,
                        reading_index: reading,
                        task_tag: task_for(session, reading),
                        signals,
                        vas: synth_vas(&mut rng, cf, pf, reading),
                    };
                    let truth = BlockTruth {
                        subject_id: subject_id(s),
                        session,
                        reading_index: reading,
                        cf_label: cf,
                        pf_label,
                        config,
                    };
                    out.push((block, truth));
                }
            }
            Ok(out)
        })
        .collect();
    let mut blocks = Vec::new();
    let mut truth = Vec::new();
    for subject in per_subject {
        for (b, t) in subject? {
            blocks.push(b);
            truth.push(t);
        }
    }
    Ok(Study {
        blocks,
        truth: StudyTruth { blocks: truth },
    })
}

/// Writes `manifest.json`, one `t_s,value` CSV per channel and block, and
/// `truth.json` under `dir`. Returns the manifest path.
pub fn write_study(study: &Study, dir: &Path) -> Result<PathBuf> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut subjects: Vec<SubjectEntry> = Vec::new();
    for block in &study.blocks {
        let rel_dir = PathBuf::from(&block.subject_id).join(block.session.as_str());
        let abs_dir = dir.join(&rel_dir);
        fs::create_dir_all(&abs_dir).map_err(|e| Error::io(&abs_dir, e))?;
        let mut channels = Vec::new();
        for (ch, sig) in &block.signals {
            let name = format!("r{}_{}.csv", block.reading_index, ch.as_str());
            write_channel_csv(&abs_dir.join(&name), sig)?;
            channels.push(ChannelEntry {
                channel_id: *ch,
                sampling_rate_hz: Some(sig.sampling_rate_hz()),
                csv_path: rel_dir.join(&name).to_string_lossy().replace('\\', "/"),
            });
        }
        let reading = ReadingEntry {
            index: block.reading_index,
            task_tag: block.task_tag,
            vas: VasEntry::from(block.vas),
            channels,
        };
        let subject = match subjects.iter_mut().find(|s| s.id == block.subject_id) {
            Some(s) => s,
            None => {
                subjects.push(SubjectEntry {
                    id: block.subject_id.clone(),
                    sessions: Vec::new(),
                });
                subjects.last_mut().unwrap()
            }
        };
        match subject
            .sessions
            .iter_mut()
            .find(|s| s.name == block.session)
        {
            Some(s) => s.readings.push(reading),
            None => subject.sessions.push(SessionEntry {
                name: block.session,
                readings: vec![reading],
            }),
        }
    }
    let manifest = Manifest { subjects };
    let path = dir.join("manifest.json");
    write_atomic(&path, serde_json::to_string_pretty(&manifest)?.as_bytes())?;
    write_atomic(
        &dir.join("truth.json"),
        serde_json::to_string_pretty(&study.truth)?.as_bytes(),
    )?;
    Ok(path)
}

/// `t_s,value` with nine and six decimals respectively.
pub fn write_channel_csv(path: &Path, signal: &SampledSignal) -> Result<()> {
    let tmp = path.with_extension("csv.tmp");
    let file = fs::File::create(&tmp).map_err(|e| Error::io(&tmp, e))?;
    let mut w = BufWriter::new(file);
    let io = |e| Error::io(path, e);
    writeln!(w, "t_s,value").map_err(io)?;
    for (i, v) in signal.samples().iter().enumerate() {
        writeln!(w, "{:.9},{:.6}", signal.time_of(i), v).map_err(io)?;
    }
    w.flush().map_err(io)?;
    drop(w);
    fs::rename(&tmp, path).map_err(io)
}

/// Write to a sibling temp file then rename over the destination.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".tmp");
    let tmp = PathBuf::from(tmp);
    fs::write(&tmp, bytes).map_err(|e| Error::io(&tmp, e))?;
    fs::rename(&tmp, path).map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ecg::{hrv_freq_features, RrSeries};

    #[test]
    fn constant_heart_rate_gives_exact_intervals() {
        let (_, truth) = gen_ecg(&EcgParams::default(), 250.0, 60.0, 4).unwrap();
        assert!(truth
            .rr_intervals_ms
            .iter()
            .all(|rr| (rr - 1000.0).abs() < 1e-9));
        assert!(truth.r_peak_times_s.len() >= 59);
    }

    #[test]
    fn modulated_tachogram_peaks_at_modulation_frequency() {
        let params = EcgParams {
            hr_bpm: 70.0,
            rr_mod_freq_hz: 0.25,
            rr_mod_depth_ms: 50.0,
            ..EcgParams::default()
        };
        let (_, truth) = gen_ecg(&params, 250.0, 180.0, 5).unwrap();
        let rr = RrSeries::from_intervals(truth.r_peak_times_s[0], truth.rr_intervals_ms.clone());
        let f = hrv_freq_features(&rr).unwrap();
        assert!(f.hf_power > 4.0 * f.lf_power, "{f:?}");
    }

    #[test]
    fn generators_are_seed_deterministic() {
        let cfg = SynthConfig {
            duration_s: 10.0,
            ..SynthConfig::default()
        };
        let (a, ta) = generate(&cfg).unwrap();
        let (b, tb) = generate(&cfg).unwrap();
        assert_eq!(a, b);
        assert_eq!(ta, tb);
        let (c, _) = generate(&SynthConfig { seed: 1, ..cfg }).unwrap();
        assert_ne!(a[&ChannelId::Emg], c[&ChannelId::Emg]);
    }

    #[test]
    fn invalid_parameters_are_rejected() {
        let bad_hr = EcgParams {
            hr_bpm: 250.0,
            ..EcgParams::default()
        };
        assert!(gen_ecg(&bad_hr, 250.0, 10.0, 0).is_err());
        let bad_weights = EegParams {
            band_weights: [0.5, 0.5, 0.5, 0.0, 0.0],
            rms_uv: 1.0,
        };
        assert!(gen_eeg(&bad_weights, ChannelId::EegAf7, 256.0, 10.0, 0).is_err());
        assert!(gen_eeg(&EegParams::default(), ChannelId::Ecg, 256.0, 10.0, 0).is_err());
        assert!(gen_emg(
            &EmgParams {
                rms_level: 1.0,
                median_freq_hz: 0.0
            },
            500.0,
            2.0,
            0
        )
        .is_err());
    }

    #[test]
    fn poisson_scr_count_is_recorded() {
        let (sig, truth) = gen_eda(&EdaParams::default(), 32.0, 60.0, 11).unwrap();
        assert_eq!(sig.len(), 1920);
        let n = truth.scr_onset_times_s.len();
        assert!((1..=12).contains(&n), "{n}");
        assert_eq!(truth.scr_peak_times_s.len(), n);
        assert!(truth
            .scr_onset_times_s
            .windows(2)
            .all(|w| w[1] - w[0] >= 3.0));
    }

    #[test]
    fn emg_rms_matches_request() {
        let (sig, _) = gen_emg(
            &EmgParams {
                rms_level: 2.0,
                median_freq_hz: 90.0,
            },
            1000.0,
            5.0,
            3,
        )
        .unwrap();
        let rms = (sig.samples().iter().map(|v| v * v).sum::<f64>() / sig.len() as f64).sqrt();
        assert!((rms - 2.0).abs() <= 0.1, "{rms}");
    }

    #[test]
    fn bateman_kernel_peaks_at_one() {
        let tp = scr_time_to_peak_s();
        assert!((scr_kernel(tp) - 1.0).abs() < 1e-12);
        assert!(scr_kernel(tp - 0.01) < 1.0 && scr_kernel(tp + 0.01) < 1.0);
        assert_eq!(scr_kernel(-1.0), 0.0);
    }

    #[test]
    fn small_study_has_protocol_shape() {
        let cfg = StudyConfig {
            n_subjects: 3,
            block_duration_s: 12.0,
            ..StudyConfig::default()
        };
        let study = gen_study(&cfg).unwrap();
        assert_eq!(study.blocks.len(), 30);
        for session in study.truth.blocks.chunks(5) {
            let cf: Vec<bool> = session.iter().map(|b| b.cf_label).collect();
            assert_eq!(cf, vec![false, false, false, true, true]);
            assert_eq!(session[2].pf_label, Some(true));
            assert_eq!(session[3].pf_label, None);
        }
        assert!(gen_study(&StudyConfig {
            n_subjects: 2,
            ..cfg
        })
        .is_err());
    }

    #[test]
    fn written_study_is_byte_identical_for_a_seed() {
        let cfg = StudyConfig {
            n_subjects: 3,
            block_duration_s: 6.0,
            rates: ChannelRates {
                ecg_hz: 125.0,
                eda_hz: 16.0,
                emg_hz: 250.0,
                eeg_hz: 128.0,
            },
            ..StudyConfig::default()
        };
        let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
        write_study(&gen_study(&cfg).unwrap(), a.path()).unwrap();
        write_study(&gen_study(&cfg).unwrap(), b.path()).unwrap();
        for rel in [
            "manifest.json",
            "truth.json",
            "S02/evening/r3_EMG.csv",
            "S01/morning/r1_EEG_AF7.csv",
        ] {
            let x = fs::read(a.path().join(rel)).unwrap();
            let y = fs::read(b.path().join(rel)).unwrap();
            assert!(!x.is_empty());
            assert_eq!(x, y, "{rel}");
        }
    }
}
