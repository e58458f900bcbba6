//! Core signal types and the DSP building blocks shared by every channel
//! module: IIR filter design and application, uniform resampling and window
//! slicing.

mod filter;
mod resample;
mod window;

pub use filter::{
    apply_filter, design_butterworth, design_notch, Biquad, BiquadCascade, FilterKind, FilterSpec,
    MAX_BUTTERWORTH_ORDER,
};
pub use resample::{interpolate_uniform, resample_uniform};
pub use window::{slice_windows, WindowPlan};

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Recorded channel identity.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum ChannelId {
    #[serde(rename = "ECG")]
    Ecg,
    #[serde(rename = "EDA")]
    Eda,
    #[serde(rename = "EMG")]
    Emg,
    #[serde(rename = "EEG_TP9")]
    EegTp9,
    #[serde(rename = "EEG_AF7")]
    EegAf7,
    #[serde(rename = "EEG_AF8")]
    EegAf8,
    #[serde(rename = "EEG_TP10")]
    EegTp10,
}

impl ChannelId {
    pub const ALL: [ChannelId; 7] = [
        ChannelId::Ecg,
        ChannelId::Eda,
        ChannelId::Emg,
        ChannelId::EegTp9,
        ChannelId::EegAf7,
        ChannelId::EegAf8,
        ChannelId::EegTp10,
    ];

    /// EEG electrodes in feature order.
    pub const EEG: [ChannelId; 4] = [
        ChannelId::EegTp9,
        ChannelId::EegAf7,
        ChannelId::EegAf8,
        ChannelId::EegTp10,
    ];

    pub const PHYSIO: [ChannelId; 3] = [ChannelId::Ecg, ChannelId::Eda, ChannelId::Emg];

    pub fn as_str(self) -> &'static str {
        match self {
            ChannelId::Ecg => "ECG",
            ChannelId::Eda => "EDA",
            ChannelId::Emg => "EMG",
            ChannelId::EegTp9 => "EEG_TP9",
            ChannelId::EegAf7 => "EEG_AF7",
            ChannelId::EegAf8 => "EEG_AF8",
            ChannelId::EegTp10 => "EEG_TP10",
        }
    }

    /// Electrode label without the `EEG_` prefix, `None` for body channels.
    pub fn electrode(self) -> Option<&'static str> {
        self.as_str().strip_prefix("EEG_")
    }

    pub fn is_eeg(self) -> bool {
        self.electrode().is_some()
    }
}

impl fmt::Display for ChannelId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ChannelId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        ChannelId::ALL
            .into_iter()
            .find(|c| c.as_str() == s)
            .ok_or_else(|| Error::Data(format!("unknown channel id {s:?}")))
    }
}

/// A uniformly sampled single-channel time series.
///
/// Construction validates the invariants: positive rate, at least one sample,
/// and every sample finite.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampledSignal {
    channel: ChannelId,
    sampling_rate_hz: f64,
    start_time_s: f64,
    samples: Vec<f64>,
}

impl SampledSignal {
    pub fn new(
        channel: ChannelId,
        sampling_rate_hz: f64,
        start_time_s: f64,
        samples: Vec<f64>,
    ) -> Result<Self> {
        if !(sampling_rate_hz.is_finite() && sampling_rate_hz > 0.0) {
            return Err(Error::Data(format!(
                "{channel}: sampling rate must be positive, got {sampling_rate_hz}"
            )));
        }
        if samples.is_empty() {
            return Err(Error::Data(format!("{channel}: signal has no samples")));
        }
        if let Some(i) = samples.iter().position(|v| !v.is_finite()) {
            return Err(Error::Data(format!(
                "{channel}: sample {i} is not finite ({})",
                samples[i]
            )));
        }
        if !start_time_s.is_finite() {
            return Err(Error::Data(format!("{channel}: start time is not finite")));
        }
        Ok(Self {
            channel,
            sampling_rate_hz,
            start_time_s,
            samples,
        })
    }

    pub fn channel(&self) -> ChannelId {
        self.channel
    }

    pub fn sampling_rate_hz(&self) -> f64 {
        self.sampling_rate_hz
    }

    pub fn start_time_s(&self) -> f64 {
        self.start_time_s
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn into_samples(self) -> Vec<f64> {
        self.samples
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// Duration covered by the samples, `len / fs`.
    pub fn duration_s(&self) -> f64 {
        self.samples.len() as f64 / self.sampling_rate_hz
    }

    pub fn nyquist_hz(&self) -> f64 {
        self.sampling_rate_hz / 2.0
    }

    /// Same rate, channel and start time, new samples.
    pub fn with_samples(&self, samples: Vec<f64>) -> Result<Self> {
        Self::new(
            self.channel,
            self.sampling_rate_hz,
            self.start_time_s,
            samples,
        )
    }

    /// Sub-range `[start, end)` in sample indices; start time is shifted
    /// accordingly.
    pub fn slice(&self, start: usize, end: usize) -> Result<Self> {
        if start >= end || end > self.samples.len() {
            return Err(Error::Contract(format!(
                "slice {start}..{end} out of range for {} samples",
                self.samples.len()
            )));
        }
        Ok(Self {
            channel: self.channel,
            sampling_rate_hz: self.sampling_rate_hz,
            start_time_s: self.start_time_s + start as f64 / self.sampling_rate_hz,
            samples: self.samples[start..end].to_vec(),
        })
    }

    /// Time stamp of sample `i`.
    pub fn time_of(&self, i: usize) -> f64 {
        self.start_time_s + i as f64 / self.sampling_rate_hz
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_invalid_signals() {
        assert!(SampledSignal::new(ChannelId::Ecg, 0.0, 0.0, vec![1.0]).is_err());
        assert!(SampledSignal::new(ChannelId::Ecg, 250.0, 0.0, vec![]).is_err());
        assert!(SampledSignal::new(ChannelId::Ecg, 250.0, 0.0, vec![1.0, f64::NAN]).is_err());
        assert!(SampledSignal::new(ChannelId::Ecg, 250.0, 0.0, vec![1.0]).is_ok());
    }

    #[test]
    fn channel_ids_round_trip_through_strings() {
        for c in ChannelId::ALL {
            assert_eq!(c.as_str().parse::<ChannelId>().unwrap(), c);
            let json = serde_json::to_string(&c).unwrap();
            assert_eq!(json, format!("\"{}\"", c.as_str()));
        }
        assert_eq!(ChannelId::EegAf7.electrode(), Some("AF7"));
        assert_eq!(ChannelId::Emg.electrode(), None);
    }

    #[test]
    fn slice_shifts_start_time() {
        let s =
            SampledSignal::new(ChannelId::Eda, 4.0, 1.0, (0..8).map(f64::from).collect()).unwrap();
        let sub = s.slice(4, 8).unwrap();
        assert_eq!(sub.start_time_s(), 2.0);
        assert_eq!(sub.samples(), &[4.0, 5.0, 6.0, 7.0]);
        assert!(s.slice(4, 9).is_err());
    }
}
