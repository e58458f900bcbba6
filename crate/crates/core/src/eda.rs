//! Electrodermal activity: low-pass cleaning, tonic/phasic split, SCR
//! detection and window features.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::signals::{apply_filter, design_butterworth, FilterSpec, SampledSignal};
use crate::stats;

pub const CLEAN_CUTOFF_HZ: f64 = 3.0;
pub const TONIC_CUTOFF_HZ: f64 = 0.05;
pub const MIN_DECOMPOSE_S: f64 = 10.0;
/// Smallest SCR amplitude kept, in microsiemens.
pub const SCR_MIN_AMPLITUDE_US: f64 = 0.01;
pub const SCR_RISE_RANGE_S: (f64, f64) = (0.5, 5.0);

/// Order-4 zero-phase low-pass at 3 Hz.
pub fn clean_eda(raw: &SampledSignal) -> Result<SampledSignal> {
    let fs = raw.sampling_rate_hz();
    if fs <= 2.0 * CLEAN_CUTOFF_HZ {
        return Err(Error::InvalidSpec(format!(
            "EDA cleaning needs fs > {} Hz, got {fs}",
            2.0 * CLEAN_CUTOFF_HZ
        )));
    }
    let lp = design_butterworth(&FilterSpec::lowpass(CLEAN_CUTOFF_HZ, 4), fs)?;
    apply_filter(raw, &lp, true)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EdaDecomposition {
    pub tonic: SampledSignal,
    pub phasic: SampledSignal,
}

impl EdaDecomposition {
    /// Both components restricted to the sample range `[start, end)`.
    pub fn slice(&self, start: usize, end: usize) -> Result<Self> {
        Ok(Self {
            tonic: self.tonic.slice(start, end)?,
            phasic: self.phasic.slice(start, end)?,
        })
    }
}

/// Tonic = order-2 zero-phase low-pass at 0.05 Hz; phasic = the remainder.
pub fn decompose(clean: &SampledSignal) -> Result<EdaDecomposition> {
    if clean.duration_s() < MIN_DECOMPOSE_S {
        return Err(Error::Data(format!(
            "EDA decomposition needs >= {MIN_DECOMPOSE_S} s, got {:.3} s",
            clean.duration_s()
        )));
    }
    let lp = design_butterworth(
        &FilterSpec::lowpass(TONIC_CUTOFF_HZ, 2),
        clean.sampling_rate_hz(),
    )?;
    let tonic = apply_filter(clean, &lp, true)?;
    let phasic: Vec<f64> = clean
        .samples()
        .iter()
        .zip(tonic.samples())
        .map(|(c, t)| c - t)
        .collect();
    Ok(EdaDecomposition {
        phasic: clean.with_samples(phasic)?,
        tonic,
    })
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ScrPeakSet {
    pub peak_times_s: Vec<f64>,
    pub onset_times_s: Vec<f64>,
    pub amplitudes_us: Vec<f64>,
    pub rise_times_s: Vec<f64>,
}

impl ScrPeakSet {
    pub fn len(&self) -> usize {
        self.peak_times_s.len()
    }

    pub fn is_empty(&self) -> bool {
        self.peak_times_s.is_empty()
    }

    /// Peaks whose peak time lies in `[start_s, end_s)`.
    pub fn within(&self, start_s: f64, end_s: f64) -> ScrPeakSet {
        let mut out = ScrPeakSet::default();
        for i in 0..self.len() {
            let t = self.peak_times_s[i];
            if t >= start_s && t < end_s {
                out.peak_times_s.push(t);
                out.onset_times_s.push(self.onset_times_s[i]);
                out.amplitudes_us.push(self.amplitudes_us[i]);
                out.rise_times_s.push(self.rise_times_s[i]);
            }
        }
        out
    }
}

/// Onset at each upward zero-slope crossing, peak at the following local
/// maximum. Responses below the amplitude threshold or outside the rise-time
/// range are dropped.
pub fn detect_scr_peaks(phasic: &SampledSignal) -> ScrPeakSet {
    let x = phasic.samples();
    let mut out = ScrPeakSet::default();
    let mut i = 1;
    while i + 1 < x.len() {
        if x[i] - x[i - 1] <= 0.0 && x[i + 1] - x[i] > 0.0 {
            let onset = i;
            let mut j = i + 1;
            while j + 1 < x.len() && x[j + 1] - x[j] > 0.0 {
                j += 1;
            }
            if j + 1 >= x.len() {
                break;
            }
            let amplitude = x[j] - x[onset];
            let (t_on, t_pk) = (phasic.time_of(onset), phasic.time_of(j));
            let rise = t_pk - t_on;
            if amplitude >= SCR_MIN_AMPLITUDE_US
                && (SCR_RISE_RANGE_S.0..=SCR_RISE_RANGE_S.1).contains(&rise)
            {
                out.onset_times_s.push(t_on);
                out.peak_times_s.push(t_pk);
                out.amplitudes_us.push(amplitude);
                out.rise_times_s.push(rise);
            }
            i = j;
        } else {
            i += 1;
        }
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EdaFeatures {
    pub scr_count: f64,
    pub scr_rate_per_min: f64,
    pub scr_mean_amp: f64,
    pub scr_max_amp: f64,
    pub scr_amp_sum: f64,
    pub tonic_mean: f64,
    pub tonic_std: f64,
    /// µS per second.
    pub tonic_slope: f64,
    pub phasic_mean: f64,
    pub phasic_std: f64,
    pub phasic_max: f64,
}

impl EdaFeatures {
    pub const NAMES: [&'static str; 11] = [
        "scr_count",
        "scr_rate_per_min",
        "scr_mean_amp",
        "scr_max_amp",
        "scr_amp_sum",
        "tonic_mean",
        "tonic_std",
        "tonic_slope",
        "phasic_mean",
        "phasic_std",
        "phasic_max",
    ];

    pub fn values(&self) -> [f64; 11] {
        [
            self.scr_count,
            self.scr_rate_per_min,
            self.scr_mean_amp,
            self.scr_max_amp,
            self.scr_amp_sum,
            self.tonic_mean,
            self.tonic_std,
            self.tonic_slope,
            self.phasic_mean,
            self.phasic_std,
            self.phasic_max,
        ]
    }
}

/// Features over the span of `decomp`; empty peak sets give zero SCR
/// statistics.
pub fn eda_features(decomp: &EdaDecomposition, peaks: &ScrPeakSet) -> EdaFeatures {
    let tonic = decomp.tonic.samples();
    let phasic = decomp.phasic.samples();
    let t: Vec<f64> = (0..tonic.len()).map(|i| decomp.tonic.time_of(i)).collect();
    let amps = &peaks.amplitudes_us;
    let count = amps.len() as f64;
    let minutes = decomp.tonic.duration_s() / 60.0;
    EdaFeatures {
        scr_count: count,
        scr_rate_per_min: count / minutes,
        scr_mean_amp: if amps.is_empty() {
            0.0
        } else {
            stats::mean(amps)
        },
        scr_max_amp: if amps.is_empty() {
            0.0
        } else {
            stats::max(amps)
        },
        scr_amp_sum: amps.iter().sum(),
        tonic_mean: stats::mean(tonic),
        tonic_std: stats::std_dev(tonic),
        tonic_slope: stats::ls_slope(&t, tonic),
        phasic_mean: stats::mean(phasic),
        phasic_std: stats::std_dev(phasic),
        phasic_max: stats::max(phasic),
    }
}
