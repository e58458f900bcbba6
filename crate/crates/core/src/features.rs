//! Versioned feature registry and per-window feature extraction.
//!
//! Preprocessing that needs context longer than a window (filter settling,
//! R-peak detection, RR cleaning, EDA decomposition, EEG envelopes) runs
//! once per block; each window then reads its slice of those products.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::dataset::RecordingBlock;
use crate::ecg::{self, HrvFeatures, HrvFrequencyDomain, HrvTimeDomain, RrSeries};
use crate::eda::{self, EdaDecomposition, EdaFeatures, ScrPeakSet};
use crate::eeg::{self, BandEnvelopeSet};
use crate::emg::{self, EmgFeatures};
use crate::error::{Error, Result};
use crate::signals::{ChannelId, SampledSignal};
use crate::stats;

/// Bumped whenever a feature is added, removed, renamed or redefined.
pub const FEATURE_REGISTRY_VERSION: u32 = 1;

/// Summary statistics of the cleaned ECG per window.
pub const ECG_SIGNAL_STATS: [&str; 7] = ["mean", "std", "min", "max", "median", "skew", "kurtosis"];

/// Which channels feed a model.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Modality {
    Eeg,
    Physio,
    All,
}

impl Modality {
    pub const ALL: [Modality; 3] = [Modality::Eeg, Modality::Physio, Modality::All];

    pub fn as_str(self) -> &'static str {
        match self {
            Modality::Eeg => "eeg",
            Modality::Physio => "physio",
            Modality::All => "all",
        }
    }

    pub fn channels(self) -> Vec<ChannelId> {
        match self {
            Modality::Eeg => ChannelId::EEG.to_vec(),
            Modality::Physio => ChannelId::PHYSIO.to_vec(),
            Modality::All => ChannelId::ALL.to_vec(),
        }
    }

    pub fn uses_eeg(self) -> bool {
        self != Modality::Physio
    }

    pub fn uses_physio(self) -> bool {
        self != Modality::Eeg
    }
}

impl fmt::Display for Modality {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Modality {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Modality::ALL
            .into_iter()
            .find(|m| m.as_str() == s.to_ascii_lowercase())
            .ok_or_else(|| {
                Error::Data(format!(
                    "unknown modality {s:?} (expected eeg, physio or all)"
                ))
            })
    }
}

/// Feature names in extraction order, prefixed by channel group.
pub fn feature_names(modality: Modality) -> Vec<String> {
    let mut names = Vec::new();
    if modality.uses_physio() {
        names.extend(HrvFeatures::names().map(|n| format!("ecg.{n}")));
        names.extend(ECG_SIGNAL_STATS.iter().map(|s| format!("ecg.signal_{s}")));
        names.extend(EdaFeatures::NAMES.iter().map(|n| format!("eda.{n}")));
        names.extend(EmgFeatures::NAMES.iter().map(|n| format!("emg.{n}")));
    }
    if modality.uses_eeg() {
        names.extend(eeg::feature_names().into_iter().map(|n| format!("eeg.{n}")));
    }
    names
}

/// Names of the sequence-mode channels, in column order.
pub fn sequence_channel_names(modality: Modality) -> Vec<String> {
    let mut names = Vec::new();
    if modality.uses_eeg() {
        for ch in ChannelId::EEG {
            for band in eeg::Band::ALL {
                names.push(format!("{}.{band}", ch.electrode().unwrap_or_default()));
            }
        }
    }
    if modality.uses_physio() {
        names.extend(["ECG.heart_rate", "EDA.clean", "EMG.rms_envelope"].map(String::from));
    }
    names
}

#[derive(Debug, Clone)]
struct EcgProducts {
    clean: SampledSignal,
    /// Cleaned RR series; empty when the block has no usable beats.
    rr: RrSeries,
}

#[derive(Debug, Clone)]
struct EdaProducts {
    decomposition: EdaDecomposition,
    peaks: ScrPeakSet,
}

/// Block-level preprocessing results for one modality set.
#[derive(Debug, Clone)]
pub struct PreparedBlock {
    modality: Modality,
    start_time_s: f64,
    duration_s: f64,
    ecg: Option<EcgProducts>,
    eda: Option<EdaProducts>,
    emg: Option<SampledSignal>,
    eeg: Option<BandEnvelopeSet>,
}

/// Moving-RMS window for the EMG sequence envelope.
const EMG_ENVELOPE_S: f64 = 0.25;

impl PreparedBlock {
    pub fn prepare(block: &RecordingBlock, modality: Modality) -> Result<Self> {
        let ctx = |e: Error| match e {
            Error::Data(m) => Error::Data(format!("{}: {m}", block.key())),
            other => other,
        };
        let mut out = PreparedBlock {
            modality,
            start_time_s: block
                .signals
                .values()
                .next()
                .map_or(0.0, |s| s.start_time_s()),
            duration_s: block.duration_s(),
            ecg: None,
            eda: None,
            emg: None,
            eeg: None,
        };
        if modality.uses_physio() {
            let raw = block.signal(ChannelId::Ecg)?;
            let clean = ecg::clean_ecg(raw).map_err(ctx)?;
            let peaks = ecg::detect_r_peaks(&clean).map_err(ctx)?;
            let raw_rr = RrSeries::from_peaks(&peaks);
            let rr = match ecg::clean_rr(&raw_rr) {
                Ok(rr) => rr,
                Err(e) => {
                    log::warn!("{}: {e}; HRV features will be missing", block.key());
                    RrSeries::default()
                }
            };
            out.ecg = Some(EcgProducts { clean, rr });

            let clean_eda = eda::clean_eda(block.signal(ChannelId::Eda)?).map_err(ctx)?;
            let decomposition = eda::decompose(&clean_eda).map_err(ctx)?;
            let peaks = eda::detect_scr_peaks(&decomposition.phasic);
            out.eda = Some(EdaProducts {
                decomposition,
                peaks,
            });

            out.emg = Some(emg::clean_emg(block.signal(ChannelId::Emg)?).map_err(ctx)?);
        }
        if modality.uses_eeg() {
            let mut set = BandEnvelopeSet::new();
            for ch in ChannelId::EEG {
                let env = eeg::band_decompose(block.signal(ch)?).map_err(ctx)?;
                set.insert(ch, env);
            }
            out.eeg = Some(set);
        }
        Ok(out)
    }

    pub fn modality(&self) -> Modality {
        self.modality
    }

    pub fn duration_s(&self) -> f64 {
        self.duration_s
    }

    /// Features of the window `[start_s, end_s)`, times relative to the
    /// block start. Values that cannot be computed are NaN.
    pub fn window_features(&self, start_s: f64, end_s: f64) -> Result<Vec<f64>> {
        let (t0, t1) = (self.start_time_s + start_s, self.start_time_s + end_s);
        let mut values = Vec::new();
        if let (Some(e), Some(d), Some(m)) = (&self.ecg, &self.eda, &self.emg) {
            let rr = e.rr.within(t0, t1);
            let time = if rr.len() >= 3 {
                ecg::hrv_time_features(&rr)?
            } else {
                HrvTimeDomain::missing()
            };
            let freq = if rr.len() >= 3 {
                ecg::hrv_freq_features(&rr)?
            } else {
                HrvFrequencyDomain::missing()
            };
            values.extend(
                HrvFeatures {
                    time,
                    frequency: freq,
                }
                .values(),
            );

            let sig = window_of(&e.clean, start_s, end_s)?;
            let x = sig.samples();
            values.extend([
                stats::mean(x),
                stats::std_dev(x),
                stats::min(x),
                stats::max(x),
                stats::median(x),
                stats::skewness(x),
                stats::kurtosis(x),
            ]);

            let (a, b) = sample_range(&d.decomposition.tonic, start_s, end_s)?;
            let decomposition = d.decomposition.slice(a, b)?;
            values.extend(eda::eda_features(&decomposition, &d.peaks.within(t0, t1)).values());

            values.extend(emg::emg_features(&window_of(m, start_s, end_s)?)?.values());
        }
        if let Some(set) = &self.eeg {
            let mut sliced = BandEnvelopeSet::new();
            for (ch, env) in set {
                let (a, b) = range_for(env.len(), env.sampling_rate_hz, start_s, end_s)?;
                sliced.insert(*ch, env.slice(a, b)?);
            }
            values.extend(eeg::eeg_features(&sliced)?.values);
        }
        Ok(values)
    }

    /// Whole-block channel series bin-averaged to `step_hz`, one inner
    /// vector per step, columns as in [`sequence_channel_names`].
    pub fn sequence(&self, step_hz: f64) -> Result<Vec<Vec<f64>>> {
        if !(step_hz > 0.0) {
            return Err(Error::Contract(format!(
                "sequence step rate must be positive, got {step_hz}"
            )));
        }
        let steps = (self.duration_s * step_hz + 1e-9).floor() as usize;
        if steps == 0 {
            return Err(Error::Data(format!(
                "block of {:.3} s is shorter than one {step_hz} Hz step",
                self.duration_s
            )));
        }
        let mut columns: Vec<Vec<f64>> = Vec::new();
        if let Some(set) = &self.eeg {
            for env in set.values() {
                for band in &env.bands {
                    columns.push(bin_average(band, env.sampling_rate_hz, step_hz, steps));
                }
            }
        }
        if let (Some(e), Some(d), Some(m)) = (&self.ecg, &self.eda, &self.emg) {
            columns.push(heart_rate_series(&e.rr, self.start_time_s, step_hz, steps));
            let clean_eda: Vec<f64> = d
                .decomposition
                .tonic
                .samples()
                .iter()
                .zip(d.decomposition.phasic.samples())
                .map(|(t, p)| t + p)
                .collect();
            columns.push(bin_average(
                &clean_eda,
                d.decomposition.tonic.sampling_rate_hz(),
                step_hz,
                steps,
            ));
            let fs = m.sampling_rate_hz();
            let squared: Vec<f64> = m.samples().iter().map(|v| v * v).collect();
            let w = ((EMG_ENVELOPE_S * fs).round() as usize).max(1);
            let envelope: Vec<f64> = stats::moving_average(&squared, w)
                .into_iter()
                .map(f64::sqrt)
                .collect();
            columns.push(bin_average(&envelope, fs, step_hz, steps));
        }
        Ok((0..steps)
            .map(|t| columns.iter().map(|c| c[t]).collect())
            .collect())
    }
}

fn range_for(n: usize, fs: f64, start_s: f64, end_s: f64) -> Result<(usize, usize)> {
    let a = (start_s * fs).round() as usize;
    let b = ((end_s * fs).round() as usize).min(n);
    if a >= b {
        return Err(Error::Contract(format!(
            "window [{start_s}, {end_s}) s is outside the block"
        )));
    }
    Ok((a, b))
}

fn sample_range(sig: &SampledSignal, start_s: f64, end_s: f64) -> Result<(usize, usize)> {
    range_for(sig.len(), sig.sampling_rate_hz(), start_s, end_s)
}

fn window_of(sig: &SampledSignal, start_s: f64, end_s: f64) -> Result<SampledSignal> {
    let (a, b) = sample_range(sig, start_s, end_s)?;
    sig.slice(a, b)
}

/// Mean of `x` over consecutive `1 / step_hz` bins.
fn bin_average(x: &[f64], fs: f64, step_hz: f64, steps: usize) -> Vec<f64> {
    (0..steps)
        .map(|k| {
            let a = ((k as f64 / step_hz) * fs).round() as usize;
            let b = ((((k + 1) as f64 / step_hz) * fs).round() as usize).min(x.len());
            if a < b {
                stats::mean(&x[a..b])
            } else {
                x.get(a.min(x.len() - 1)).copied().unwrap_or(0.0)
            }
        })
        .collect()
}

/// Instantaneous heart rate (bpm) sampled at the middle of each step, held
/// constant over each interval; zero when no beats are available.
fn heart_rate_series(rr: &RrSeries, t0: f64, step_hz: f64, steps: usize) -> Vec<f64> {
    (0..steps)
        .map(|k| {
            if rr.is_empty() {
                return 0.0;
            }
            let t = t0 + (k as f64 + 0.5) / step_hz;
            let i = rr
                .onset_times_s
                .partition_point(|&o| o <= t)
                .saturating_sub(1);
            60_000.0 / rr.intervals_ms[i]
        })
        .collect()
}
