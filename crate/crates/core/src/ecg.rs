//! ECG processing: baseline/power-line cleaning, Pan-Tompkins R-peak
//! detection, RR-series cleaning and HRV features.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::signals::{apply_filter, design_butterworth, design_notch, FilterSpec, SampledSignal};
use crate::spectral::welch;
use crate::stats;

/// Physiologic RR range kept by [`clean_rr`], in milliseconds.
pub const RR_MIN_MS: f64 = 300.0;
pub const RR_MAX_MS: f64 = 2000.0;

const REFRACTORY_S: f64 = 0.2;
const T_WAVE_WINDOW_S: f64 = 0.36;
const REFINE_S: f64 = 0.04;
const INTEGRATION_S: f64 = 0.15;

/// Minimum tachogram span for spectral HRV.
pub const MIN_SPECTRAL_SPAN_S: f64 = 30.0;
const TACHOGRAM_FS: f64 = 4.0;
const WELCH_SEGMENT_S: f64 = 16.0;

pub const VLF_BAND: (f64, f64) = (0.003, 0.04);
pub const LF_BAND: (f64, f64) = (0.04, 0.15);
pub const HF_BAND: (f64, f64) = (0.15, 0.4);

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct RPeakList {
    pub sample_indices: Vec<usize>,
    pub times_s: Vec<f64>,
}

impl RPeakList {
    pub fn len(&self) -> usize {
        self.sample_indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sample_indices.is_empty()
    }
}

/// Beat-to-beat intervals. `onset_times_s[i]` is the time of the beat that
/// opens interval `i`.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct RrSeries {
    pub onset_times_s: Vec<f64>,
    pub intervals_ms: Vec<f64>,
}

impl RrSeries {
    pub fn from_peaks(peaks: &RPeakList) -> Self {
        let onset_times_s = peaks
            .times_s
            .iter()
            .take(peaks.len().saturating_sub(1))
            .copied()
            .collect();
        let intervals_ms = peaks
            .times_s
            .windows(2)
            .map(|w| (w[1] - w[0]) * 1000.0)
            .collect();
        Self {
            onset_times_s,
            intervals_ms,
        }
    }

    /// Builds a series from intervals alone, the first beat at `t0`.
    pub fn from_intervals(t0: f64, intervals_ms: Vec<f64>) -> Self {
        let mut t = t0;
        let onset_times_s = intervals_ms
            .iter()
            .map(|rr| {
                let onset = t;
                t += rr / 1000.0;
                onset
            })
            .collect();
        Self {
            onset_times_s,
            intervals_ms,
        }
    }

    pub fn len(&self) -> usize {
        self.intervals_ms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.intervals_ms.is_empty()
    }

    /// Time covered from the first onset to the closing beat of the last
    /// interval.
    pub fn span_s(&self) -> f64 {
        self.intervals_ms.iter().sum::<f64>() / 1000.0
    }

    /// Intervals whose opening beat lies in `[start_s, end_s)`.
    pub fn within(&self, start_s: f64, end_s: f64) -> RrSeries {
        let (onset_times_s, intervals_ms) = self
            .onset_times_s
            .iter()
            .zip(&self.intervals_ms)
            .filter(|(t, _)| **t >= start_s && **t < end_s)
            .map(|(t, rr)| (*t, *rr))
            .unzip();
        RrSeries {
            onset_times_s,
            intervals_ms,
        }
    }
}

/// High-pass at 0.5 Hz (order 4) then a 50 Hz notch (Q 30), both zero-phase.
pub fn clean_ecg(raw: &SampledSignal) -> Result<SampledSignal> {
    let fs = raw.sampling_rate_hz();
    let hp = design_butterworth(&FilterSpec::highpass(0.5, 4), fs)?;
    let notch = design_notch(50.0, 30.0, fs)?;
    let x = apply_filter(raw, &hp, true)?;
    apply_filter(&x, &notch, true)
}

/// Pan-Tompkins QRS detection.
///
/// Stages: 5-15 Hz band-pass, five-point derivative, squaring, 150 ms moving
/// window integration, then dual adaptive thresholds on the integrated
/// signal with a 200 ms refractory period, T-wave slope discrimination and
/// search-back. Detections are moved to the largest sample of `ecg` within
/// 40 ms.
pub fn detect_r_peaks(ecg: &SampledSignal) -> Result<RPeakList> {
    let fs = ecg.sampling_rate_hz();
    if fs < 100.0 {
        return Err(Error::Data(format!(
            "QRS detection needs fs >= 100 Hz, got {fs}"
        )));
    }
    if ecg.duration_s() < 5.0 - 0.5 / fs {
        return Err(Error::Data(format!(
            "QRS detection needs >= 5 s of ECG, got {:.3} s",
            ecg.duration_s()
        )));
    }
    let x = ecg.samples();
    let energy_x = x.iter().map(|v| v * v).sum::<f64>();
    if energy_x == 0.0 {
        return Ok(RPeakList::default());
    }

    let bp = design_butterworth(&FilterSpec::bandpass(5.0, 15.0, 4), fs)?;
    let filtered = bp.filter_zero_phase(x);
    let energy_bp = filtered.iter().map(|v| v * v).sum::<f64>();
    if !(energy_bp > 1e-20 * energy_x) {
        return Ok(RPeakList::default());
    }

    let n = filtered.len();
    let mut slope = vec![0.0; n];
    for i in 2..n.saturating_sub(2) {
        slope[i] =
            (2.0 * filtered[i + 2] + filtered[i + 1] - filtered[i - 1] - 2.0 * filtered[i - 2])
                / 8.0;
    }
    let squared: Vec<f64> = slope.iter().map(|d| d * d).collect();
    let integrated = stats::moving_average(&squared, (INTEGRATION_S * fs).round() as usize);

    let refractory = (REFRACTORY_S * fs).round() as usize;
    let candidates = local_maxima(&integrated, refractory);
    let accepted = classify_candidates(&candidates, &integrated, &slope, fs);

    let half = (REFINE_S * fs).round() as usize;
    let mut sample_indices: Vec<usize> = Vec::with_capacity(accepted.len());
    for idx in accepted {
        let lo = idx.saturating_sub(half);
        let hi = (idx + half + 1).min(n);
        let best = (lo..hi)
            .max_by(|&a, &b| x[a].total_cmp(&x[b]))
            .unwrap_or(idx);
        match sample_indices.last() {
            Some(&prev) if best < prev + refractory => {
                if x[best] > x[prev] {
                    *sample_indices.last_mut().unwrap() = best;
                }
            }
            _ => sample_indices.push(best),
        }
    }
    let times_s = sample_indices.iter().map(|&i| ecg.time_of(i)).collect();
    Ok(RPeakList {
        sample_indices,
        times_s,
    })
}

/// Local maxima at least `min_gap` samples apart; within a gap the taller
/// one survives.
fn local_maxima(y: &[f64], min_gap: usize) -> Vec<usize> {
    let mut out: Vec<usize> = Vec::new();
    for i in 1..y.len().saturating_sub(1) {
        if y[i] > y[i - 1] && y[i] >= y[i + 1] && y[i] > 0.0 {
            match out.last() {
                Some(&prev) if i - prev < min_gap => {
                    if y[i] > y[prev] {
                        *out.last_mut().unwrap() = i;
                    }
                }
                _ => out.push(i),
            }
        }
    }
    out
}

struct Thresholds {
    signal: f64,
    noise: f64,
}

impl Thresholds {
    fn primary(&self) -> f64 {
        self.noise + 0.25 * (self.signal - self.noise)
    }

    fn secondary(&self) -> f64 {
        0.5 * self.primary()
    }
}

fn max_abs_slope(slope: &[f64], center: usize, half: usize) -> f64 {
    let lo = center.saturating_sub(half);
    let hi = (center + half + 1).min(slope.len());
    slope[lo..hi].iter().fold(0.0f64, |m, v| m.max(v.abs()))
}

fn classify_candidates(
    candidates: &[usize],
    integrated: &[f64],
    slope: &[f64],
    fs: f64,
) -> Vec<usize> {
    let learn = ((2.0 * fs) as usize).min(integrated.len());
    let head = &integrated[..learn];
    let mut th = Thresholds {
        signal: stats::max(head) / 3.0,
        noise: stats::mean(head) / 2.0,
    };
    let refractory = (REFRACTORY_S * fs).round() as usize;
    let t_wave = (T_WAVE_WINDOW_S * fs).round() as usize;
    let slope_half = (0.075 * fs).round() as usize;

    let mut accepted: Vec<usize> = Vec::new();
    let mut accepted_slope = 0.0;
    let mut rr: Vec<usize> = Vec::new();
    let mut is_qrs = vec![false; candidates.len()];
    let mut last_pos: Option<usize> = None;

    for (ci, &c) in candidates.iter().enumerate() {
        // search-back for a missed beat before judging this candidate
        if let (Some(last_ci), true) = (last_pos, rr.len() >= 2) {
            let last = candidates[last_ci];
            let avg = rr.iter().rev().take(8).sum::<usize>() as f64 / rr.len().min(8) as f64;
            if (c - last) as f64 > 1.66 * avg {
                let missed = (last_ci + 1..ci)
                    .filter(|&j| {
                        let p = candidates[j];
                        p >= last + refractory
                            && c >= p + refractory
                            && integrated[p] > th.secondary()
                    })
                    .max_by(|&a, &b| {
                        integrated[candidates[a]].total_cmp(&integrated[candidates[b]])
                    });
                if let Some(j) = missed {
                    let p = candidates[j];
                    th.signal = 0.25 * integrated[p] + 0.75 * th.signal;
                    is_qrs[j] = true;
                    rr.push(p - last);
                    accepted.push(p);
                    accepted_slope = max_abs_slope(slope, p, slope_half);
                    last_pos = Some(j);
                }
            }
        }

        let peak = integrated[c];
        if peak > th.primary() {
            let mut t_wave_like = false;
            if let Some(last_ci) = last_pos {
                let last = candidates[last_ci];
                if c < last + refractory {
                    t_wave_like = true;
                } else if c < last + t_wave {
                    let s = max_abs_slope(slope, c, slope_half);
                    t_wave_like = s < 0.5 * accepted_slope;
                }
            }
            if t_wave_like {
                th.noise = 0.125 * peak + 0.875 * th.noise;
            } else {
                th.signal = 0.125 * peak + 0.875 * th.signal;
                if let Some(last_ci) = last_pos {
                    rr.push(c - candidates[last_ci]);
                }
                is_qrs[ci] = true;
                accepted.push(c);
                accepted_slope = max_abs_slope(slope, c, slope_half);
                last_pos = Some(ci);
            }
        } else {
            th.noise = 0.125 * peak + 0.875 * th.noise;
        }
    }
    accepted.sort_unstable();
    accepted
}

/// Removes non-physiologic and locally deviant intervals and fills them by
/// linear interpolation over the interval index.
///
/// An interval is rejected when it lies outside [300, 2000] ms or deviates
/// from the median of its 11-interval neighbourhood by more than three
/// scaled MADs. The scaled MAD is floored at 1% of the local median so that
/// sample-quantized but otherwise constant series are left alone.
pub fn clean_rr(raw: &RrSeries) -> Result<RrSeries> {
    let n = raw.len();
    if n < 3 {
        return Err(Error::Data(format!(
            "RR cleaning needs >= 3 intervals, got {n}"
        )));
    }
    let x = &raw.intervals_ms;
    let in_range: Vec<bool> = x
        .iter()
        .map(|&v| (RR_MIN_MS..=RR_MAX_MS).contains(&v))
        .collect();
    let mut valid = in_range.clone();
    for i in 0..n {
        if !in_range[i] {
            continue;
        }
        let lo = i.saturating_sub(5);
        let hi = (i + 6).min(n);
        let neighbourhood: Vec<f64> = (lo..hi).filter(|&j| in_range[j]).map(|j| x[j]).collect();
        let med = stats::median(&neighbourhood);
        let scaled_mad = (1.4826 * stats::mad(&neighbourhood)).max(0.01 * med);
        if (x[i] - med).abs() > 3.0 * scaled_mad {
            valid[i] = false;
        }
    }
    let good: Vec<usize> = (0..n).filter(|&i| valid[i]).collect();
    if good.len() < 2 {
        return Err(Error::Data(format!(
            "unusable RR series: {} of {n} intervals valid",
            good.len()
        )));
    }
    let mut cleaned = x.clone();
    for i in 0..n {
        if valid[i] {
            continue;
        }
        let next = good.partition_point(|&g| g < i);
        cleaned[i] = if next == 0 {
            x[good[0]]
        } else if next == good.len() {
            x[good[good.len() - 1]]
        } else {
            let (a, b) = (good[next - 1], good[next]);
            let frac = (i - a) as f64 / (b - a) as f64;
            x[a] + (x[b] - x[a]) * frac
        };
    }
    Ok(RrSeries::from_intervals(raw.onset_times_s[0], cleaned))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HrvTimeDomain {
    pub mean_nn_ms: f64,
    pub sdnn_ms: f64,
    pub rmssd_ms: f64,
    pub sdsd_ms: f64,
    pub pnn50: f64,
    pub pnn20: f64,
    pub cvnn: f64,
    pub median_nn_ms: f64,
    pub mad_nn_ms: f64,
    pub hr_mean_bpm: f64,
    pub hr_min_bpm: f64,
    pub hr_max_bpm: f64,
    pub tri_index: f64,
}

impl HrvTimeDomain {
    pub const NAMES: [&'static str; 13] = [
        "mean_nn_ms",
        "sdnn_ms",
        "rmssd_ms",
        "sdsd_ms",
        "pnn50",
        "pnn20",
        "cvnn",
        "median_nn_ms",
        "mad_nn_ms",
        "hr_mean_bpm",
        "hr_min_bpm",
        "hr_max_bpm",
        "tri_index",
    ];

    pub fn missing() -> Self {
        Self::from_values([f64::NAN; 13])
    }

    fn from_values(v: [f64; 13]) -> Self {
        Self {
            mean_nn_ms: v[0],
            sdnn_ms: v[1],
            rmssd_ms: v[2],
            sdsd_ms: v[3],
            pnn50: v[4],
            pnn20: v[5],
            cvnn: v[6],
            median_nn_ms: v[7],
            mad_nn_ms: v[8],
            hr_mean_bpm: v[9],
            hr_min_bpm: v[10],
            hr_max_bpm: v[11],
            tri_index: v[12],
        }
    }

    pub fn values(&self) -> [f64; 13] {
        [
            self.mean_nn_ms,
            self.sdnn_ms,
            self.rmssd_ms,
            self.sdsd_ms,
            self.pnn50,
            self.pnn20,
            self.cvnn,
            self.median_nn_ms,
            self.mad_nn_ms,
            self.hr_mean_bpm,
            self.hr_min_bpm,
            self.hr_max_bpm,
            self.tri_index,
        ]
    }
}

/// Spectral HRV; every field is NaN (the missing marker) when the series
/// spans less than 30 s.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HrvFrequencyDomain {
    pub vlf_power: f64,
    pub lf_power: f64,
    pub hf_power: f64,
    pub total_power: f64,
    pub lf_hf_ratio: f64,
    pub lf_norm: f64,
    pub hf_norm: f64,
}

impl HrvFrequencyDomain {
    pub const NAMES: [&'static str; 7] = [
        "vlf_power",
        "lf_power",
        "hf_power",
        "total_power",
        "lf_hf_ratio",
        "lf_norm",
        "hf_norm",
    ];

    pub fn missing() -> Self {
        Self {
            vlf_power: f64::NAN,
            lf_power: f64::NAN,
            hf_power: f64::NAN,
            total_power: f64::NAN,
            lf_hf_ratio: f64::NAN,
            lf_norm: f64::NAN,
            hf_norm: f64::NAN,
        }
    }

    pub fn is_missing(&self) -> bool {
        self.total_power.is_nan()
    }

    pub fn values(&self) -> [f64; 7] {
        [
            self.vlf_power,
            self.lf_power,
            self.hf_power,
            self.total_power,
            self.lf_hf_ratio,
            self.lf_norm,
            self.hf_norm,
        ]
    }
}

/// The full HRV record: 13 time-domain plus 7 frequency-domain fields.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HrvFeatures {
    pub time: HrvTimeDomain,
    pub frequency: HrvFrequencyDomain,
}

impl HrvFeatures {
    pub fn names() -> impl Iterator<Item = &'static str> {
        HrvTimeDomain::NAMES
            .into_iter()
            .chain(HrvFrequencyDomain::NAMES)
    }

    pub fn values(&self) -> Vec<f64> {
        self.time
            .values()
            .into_iter()
            .chain(self.frequency.values())
            .collect()
    }
}

pub fn hrv_time_features(rr: &RrSeries) -> Result<HrvTimeDomain> {
    let x = &rr.intervals_ms;
    if x.len() < 3 {
        return Err(Error::Data(format!(
            "time-domain HRV needs >= 3 intervals, got {}",
            x.len()
        )));
    }
    let diffs: Vec<f64> = x.windows(2).map(|w| w[1] - w[0]).collect();
    let mean_nn = stats::mean(x);
    let sdnn = stats::std_dev(x);
    let rmssd = (diffs.iter().map(|d| d * d).sum::<f64>() / diffs.len() as f64).sqrt();
    let frac_over =
        |limit: f64| diffs.iter().filter(|d| d.abs() > limit).count() as f64 / diffs.len() as f64;
    let hr: Vec<f64> = x.iter().map(|rr| 60_000.0 / rr).collect();

    // triangular index: N / tallest bin of a 1/128 s histogram
    let bin = 1000.0 / 128.0;
    let lo = stats::min(x);
    let mut counts = std::collections::BTreeMap::<i64, usize>::new();
    for v in x {
        *counts.entry(((v - lo) / bin).floor() as i64).or_default() += 1;
    }
    let tallest = counts.values().copied().max().unwrap_or(1);

    Ok(HrvTimeDomain {
        mean_nn_ms: mean_nn,
        sdnn_ms: sdnn,
        rmssd_ms: rmssd,
        sdsd_ms: stats::std_dev(&diffs),
        pnn50: frac_over(50.0),
        pnn20: frac_over(20.0),
        cvnn: sdnn / mean_nn,
        median_nn_ms: stats::median(x),
        mad_nn_ms: stats::mad(x),
        hr_mean_bpm: stats::mean(&hr),
        hr_min_bpm: 60_000.0 / stats::max(x),
        hr_max_bpm: 60_000.0 / stats::min(x),
        tri_index: x.len() as f64 / tallest as f64,
    })
}

/// Welch spectrum of the 4 Hz-resampled, mean-removed tachogram integrated
/// over the VLF, LF and HF bands (ms²).
pub fn hrv_freq_features(rr: &RrSeries) -> Result<HrvFrequencyDomain> {
    if rr.len() < 2 || rr.span_s() < MIN_SPECTRAL_SPAN_S {
        return Ok(HrvFrequencyDomain::missing());
    }
    let times: Vec<f64> = rr
        .onset_times_s
        .iter()
        .zip(&rr.intervals_ms)
        .map(|(t, ms)| t + ms / 1000.0)
        .collect();
    let mut tachogram =
        crate::signals::interpolate_uniform(&times, &rr.intervals_ms, TACHOGRAM_FS)?;
    let m = stats::mean(&tachogram);
    tachogram.iter_mut().for_each(|v| *v -= m);
    let nperseg = (WELCH_SEGMENT_S * TACHOGRAM_FS) as usize;
    let psd = welch(&tachogram, TACHOGRAM_FS, nperseg, nperseg / 2);
    let vlf = psd.band_power(VLF_BAND.0, VLF_BAND.1);
    let lf = psd.band_power(LF_BAND.0, LF_BAND.1);
    let hf = psd.band_power(HF_BAND.0, HF_BAND.1);
    let (lf_norm, hf_norm) = if lf + hf > 0.0 {
        (lf / (lf + hf), hf / (lf + hf))
    } else {
        (0.0, 0.0)
    };
    Ok(HrvFrequencyDomain {
        vlf_power: vlf,
        lf_power: lf,
        hf_power: hf,
        total_power: psd.total_power(),
        lf_hf_ratio: if hf > 0.0 { lf / hf } else { 0.0 },
        lf_norm,
        hf_norm,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::signals::ChannelId;
    use crate::synth::{gen_ecg, EcgParams};

    fn synth_ecg(hr: f64, seconds: f64, seed: u64) -> (SampledSignal, Vec<f64>) {
        let params = EcgParams {
            hr_bpm: hr,
            ..EcgParams::default()
        };
        let (sig, truth) = gen_ecg(&params, 250.0, seconds, seed).unwrap();
        (sig, truth.r_peak_times_s)
    }

    #[test]
    fn detects_every_beat_at_60_bpm() {
        let (sig, truth) = synth_ecg(60.0, 60.0, 1);
        let peaks = detect_r_peaks(&sig).unwrap();
        assert!((peaks.len() as i64 - 60).abs() <= 1, "{}", peaks.len());
        for t in &truth {
            let nearest = peaks
                .times_s
                .iter()
                .map(|p| (p - t).abs())
                .fold(f64::INFINITY, f64::min);
            assert!(nearest <= 0.020, "beat at {t} missed by {nearest}");
        }
    }

    #[test]
    fn median_spacing_at_120_bpm() {
        let (sig, _) = synth_ecg(120.0, 60.0, 2);
        let peaks = detect_r_peaks(&sig).unwrap();
        let rr = RrSeries::from_peaks(&peaks);
        let med = stats::median(&rr.intervals_ms);
        assert!((med - 500.0).abs() <= 20.0, "{med}");
    }

    #[test]
    fn flat_signals_have_no_peaks() {
        let zero = SampledSignal::new(ChannelId::Ecg, 250.0, 0.0, vec![0.0; 2500]).unwrap();
        assert!(detect_r_peaks(&zero).unwrap().is_empty());
        let constant = SampledSignal::new(ChannelId::Ecg, 250.0, 0.0, vec![0.7; 2500]).unwrap();
        assert!(detect_r_peaks(&constant).unwrap().is_empty());
    }

    #[test]
    fn detection_preconditions() {
        let short = SampledSignal::new(ChannelId::Ecg, 250.0, 0.0, vec![0.0; 1000]).unwrap();
        assert!(matches!(detect_r_peaks(&short), Err(Error::Data(_))));
        let slow = SampledSignal::new(ChannelId::Ecg, 50.0, 0.0, vec![0.0; 1000]).unwrap();
        assert!(matches!(detect_r_peaks(&slow), Err(Error::Data(_))));
    }

    #[test]
    fn detection_is_scale_invariant() {
        let (sig, _) = synth_ecg(75.0, 30.0, 3);
        let base = detect_r_peaks(&sig).unwrap();
        for k in [1e-3, 0.5, 7.0, 1e4] {
            let scaled = sig
                .with_samples(sig.samples().iter().map(|v| v * k).collect())
                .unwrap();
            assert_eq!(
                detect_r_peaks(&scaled).unwrap().sample_indices,
                base.sample_indices,
                "k={k}"
            );
        }
    }

    #[test]
    fn clean_rr_leaves_constant_series() {
        let rr = RrSeries::from_intervals(0.0, vec![800.0; 20]);
        assert_eq!(clean_rr(&rr).unwrap(), rr);
    }

    #[test]
    fn clean_rr_interpolates_an_outlier() {
        let mut iv = vec![800.0; 5];
        iv.push(3000.0);
        iv.extend([800.0; 5]);
        let cleaned = clean_rr(&RrSeries::from_intervals(0.0, iv)).unwrap();
        assert_eq!(cleaned.intervals_ms[5], 800.0);
        assert!(cleaned.intervals_ms.iter().all(|&v| v == 800.0));
    }

    #[test]
    fn clean_rr_rejects_local_deviation_and_fills_edges() {
        let iv = vec![
            1500.0, 800.0, 810.0, 790.0, 800.0, 805.0, 795.0, 800.0, 1300.0,
        ];
        let cleaned = clean_rr(&RrSeries::from_intervals(0.0, iv)).unwrap();
        assert_eq!(cleaned.intervals_ms[0], 800.0);
        assert_eq!(cleaned.intervals_ms[8], 800.0);
        assert_eq!(cleaned.intervals_ms[2], 810.0);
    }

    #[test]
    fn clean_rr_rejects_unusable_series() {
        let rr = RrSeries::from_intervals(0.0, vec![100.0; 10]);
        assert!(matches!(clean_rr(&rr), Err(Error::Data(_))));
        assert!(clean_rr(&RrSeries::from_intervals(0.0, vec![800.0; 2])).is_err());
    }

    #[test]
    fn time_features_of_constant_series() {
        let f = hrv_time_features(&RrSeries::from_intervals(0.0, vec![800.0; 30])).unwrap();
        assert_eq!(f.sdnn_ms, 0.0);
        assert_eq!(f.rmssd_ms, 0.0);
        assert_eq!(f.mean_nn_ms, 800.0);
        assert_eq!(f.hr_mean_bpm, 75.0);
        assert_eq!(f.pnn50, 0.0);
        assert_eq!(f.tri_index, 1.0);
    }

    #[test]
    fn rmssd_of_alternating_series() {
        let iv: Vec<f64> = (0..40)
            .map(|i| if i % 2 == 0 { 790.0 } else { 810.0 })
            .collect();
        let f = hrv_time_features(&RrSeries::from_intervals(0.0, iv)).unwrap();
        assert!((f.rmssd_ms - 20.0).abs() < 1e-9);
        assert_eq!(f.pnn20, 0.0);
        assert_eq!(f.pnn50, 0.0);
    }

    #[test]
    fn sdnn_by_hand() {
        let f =
            hrv_time_features(&RrSeries::from_intervals(0.0, vec![600.0, 700.0, 800.0])).unwrap();
        assert_eq!(f.mean_nn_ms, 700.0);
        // sqrt(((-100)^2 + 0 + 100^2) / 3)
        assert!((f.sdnn_ms - (20_000.0f64 / 3.0).sqrt()).abs() < 1e-9);
        assert!((f.sdnn_ms - 81.65).abs() < 0.01);
        assert!(hrv_time_features(&RrSeries::from_intervals(0.0, vec![600.0, 700.0])).is_err());
    }

    fn modulated(freq: f64, depth: f64, seconds: f64) -> RrSeries {
        let mut t = 0.0;
        let mut iv = Vec::new();
        while t < seconds {
            let rr = 800.0 + depth * (2.0 * std::f64::consts::PI * freq * t).sin();
            iv.push(rr);
            t += rr / 1000.0;
        }
        RrSeries::from_intervals(0.0, iv)
    }

    #[test]
    fn constant_rr_has_no_spectral_power() {
        let f = hrv_freq_features(&RrSeries::from_intervals(0.0, vec![800.0; 100])).unwrap();
        assert!(f.vlf_power.abs() < 1e-12 && f.lf_power.abs() < 1e-12 && f.hf_power.abs() < 1e-12);
        assert_eq!(f.lf_norm + f.hf_norm, 0.0);
    }

    #[test]
    fn respiratory_modulation_lands_in_hf() {
        let f = hrv_freq_features(&modulated(0.25, 50.0, 120.0)).unwrap();
        assert!(f.hf_power / f.total_power >= 0.8, "{f:?}");
        assert!((f.lf_norm + f.hf_norm - 1.0).abs() < 1e-9);
        assert!(f.vlf_power + f.lf_power + f.hf_power <= f.total_power + 1e-9);
    }

    #[test]
    fn slow_modulation_lands_in_lf() {
        let f = hrv_freq_features(&modulated(0.1, 50.0, 120.0)).unwrap();
        assert!(f.lf_hf_ratio > 1.0, "{f:?}");
    }

    #[test]
    fn short_series_get_the_missing_marker() {
        let f = hrv_freq_features(&RrSeries::from_intervals(0.0, vec![800.0; 20])).unwrap();
        assert!(f.is_missing());
        assert!(f.values().iter().all(|v| v.is_nan()));
    }

    #[test]
    fn within_selects_by_onset() {
        let rr = RrSeries::from_intervals(0.0, vec![1000.0; 10]);
        let w = rr.within(2.0, 5.0);
        assert_eq!(w.onset_times_s, vec![2.0, 3.0, 4.0]);
    }
}
