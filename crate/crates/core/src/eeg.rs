//! EEG band envelopes and the per-electrode statistical feature vector.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::signals::{apply_filter, design_butterworth, ChannelId, FilterSpec, SampledSignal};
use crate::stats;

pub const MIN_DURATION_S: f64 = 2.0;
pub const ENVELOPE_SMOOTHING_S: f64 = 0.5;
/// Band edges are clamped to this fraction of the sampling rate.
pub const MAX_EDGE_FRACTION: f64 = 0.45;
pub const STATS: [&str; 5] = ["mean", "std", "min", "max", "median"];

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Band {
    Delta,
    Theta,
    Alpha,
    Beta,
    Gamma,
}

impl Band {
    pub const ALL: [Band; 5] = [
        Band::Delta,
        Band::Theta,
        Band::Alpha,
        Band::Beta,
        Band::Gamma,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Band::Delta => "delta",
            Band::Theta => "theta",
            Band::Alpha => "alpha",
            Band::Beta => "beta",
            Band::Gamma => "gamma",
        }
    }

    pub fn edges(self) -> (f64, f64) {
        match self {
            Band::Delta => (0.5, 4.0),
            Band::Theta => (4.0, 7.0),
            Band::Alpha => (8.0, 12.0),
            Band::Beta => (13.0, 30.0),
            Band::Gamma => (30.0, 80.0),
        }
    }

    /// Canonical edges with the upper edge clamped to `0.45 fs`.
    pub fn edges_for(self, fs: f64) -> (f64, f64) {
        let (lo, hi) = self.edges();
        (lo, hi.min(MAX_EDGE_FRACTION * fs))
    }

    pub fn center_hz(self, fs: f64) -> f64 {
        let (lo, hi) = self.edges_for(fs);
        0.5 * (lo + hi)
    }
}

impl fmt::Display for Band {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Band envelopes of one electrode, in [`Band::ALL`] order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BandEnvelopes {
    pub electrode: ChannelId,
    pub sampling_rate_hz: f64,
    pub bands: [Vec<f64>; 5],
}

impl BandEnvelopes {
    pub fn band(&self, band: Band) -> &[f64] {
        &self.bands[band as usize]
    }

    pub fn len(&self) -> usize {
        self.bands[0].len()
    }

    pub fn is_empty(&self) -> bool {
        self.bands[0].is_empty()
    }

    /// Sample range `[start, end)` of every band.
    pub fn slice(&self, start: usize, end: usize) -> Result<Self> {
        if start >= end || end > self.len() {
            return Err(Error::Contract(format!(
                "envelope slice {start}..{end} out of range {}",
                self.len()
            )));
        }
        Ok(Self {
            electrode: self.electrode,
            sampling_rate_hz: self.sampling_rate_hz,
            bands: std::array::from_fn(|b| self.bands[b][start..end].to_vec()),
        })
    }
}

/// Envelopes of all electrodes of a recording.
pub type BandEnvelopeSet = BTreeMap<ChannelId, BandEnvelopes>;

/// Order-4 zero-phase band-pass per band, then rectification and a 0.5 s
/// centered moving average.
pub fn band_decompose(eeg: &SampledSignal) -> Result<BandEnvelopes> {
    if !eeg.channel().is_eeg() {
        return Err(Error::Contract(format!(
            "{} is not an EEG channel",
            eeg.channel()
        )));
    }
    if eeg.duration_s() + 1e-9 < MIN_DURATION_S {
        return Err(Error::Data(format!(
            "{}: EEG band decomposition needs >= {MIN_DURATION_S} s, got {:.3} s",
            eeg.channel(),
            eeg.duration_s()
        )));
    }
    let fs = eeg.sampling_rate_hz();
    let smooth = ((ENVELOPE_SMOOTHING_S * fs).round() as usize).max(1);
    let mut bands: [Vec<f64>; 5] = Default::default();
    for band in Band::ALL {
        let (lo, hi) = band.edges_for(fs);
        if lo >= hi {
            return Err(Error::InvalidSpec(format!(
                "{band} band is empty at fs {fs} Hz"
            )));
        }
        let bp = design_butterworth(&FilterSpec::bandpass(lo, hi, 4), fs)?;
        let filtered = apply_filter(eeg, &bp, true)?;
        let rectified: Vec<f64> = filtered.samples().iter().map(|v| v.abs()).collect();
        bands[band as usize] = stats::moving_average(&rectified, smooth);
    }
    Ok(BandEnvelopes {
        electrode: eeg.channel(),
        sampling_rate_hz: fs,
        bands,
    })
}

/// `electrode.band.stat`, e.g. `TP9.alpha.median`, for the four electrodes.
pub fn feature_names() -> Vec<String> {
    let mut names = Vec::with_capacity(100);
    for ch in ChannelId::EEG {
        let electrode = ch.electrode().unwrap_or_default();
        for band in Band::ALL {
            for stat in STATS {
                names.push(format!("{electrode}.{band}.{stat}"));
            }
        }
    }
    names
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EegFeatureVector {
    pub names: Vec<String>,
    pub values: Vec<f64>,
}

/// Mean, std, min, max and median of each of the 20 envelopes.
pub fn eeg_features(envelopes: &BandEnvelopeSet) -> Result<EegFeatureVector> {
    let mut values = Vec::with_capacity(100);
    for ch in ChannelId::EEG {
        let env = envelopes.get(&ch).ok_or_else(|| {
            Error::Data(format!(
                "missing EEG electrode {}",
                ch.electrode().unwrap_or_default()
            ))
        })?;
        for band in Band::ALL {
            let x = env.band(band);
            if x.is_empty() {
                return Err(Error::Data(format!("{ch}: empty {band} envelope")));
            }
            values.extend([
                stats::mean(x),
                stats::std_dev(x),
                stats::min(x),
                stats::max(x),
                stats::median(x),
            ]);
        }
    }
    Ok(EegFeatureVector {
        names: feature_names(),
        values,
    })
}
