//! Surface EMG cleaning and time/frequency features.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::signals::{apply_filter, design_butterworth, design_notch, FilterSpec, SampledSignal};
use crate::spectral::{welch, Psd};
use crate::stats;

pub const MIN_CLEAN_FS_HZ: f64 = 120.0;
pub const HIGHPASS_HZ: f64 = 10.0;
pub const MIN_TIME_WINDOW_S: f64 = 0.5;
pub const MIN_FREQ_WINDOW_S: f64 = 1.0;
/// ZC/SSC hysteresis as a fraction of the window RMS.
pub const HYSTERESIS_FRACTION: f64 = 0.01;
pub const BAND_POWER_RANGE_HZ: (f64, f64) = (20.0, 450.0);

/// 50 Hz notch (Q 30) followed by an order-4 high-pass at 10 Hz, zero-phase.
pub fn clean_emg(raw: &SampledSignal) -> Result<SampledSignal> {
    let fs = raw.sampling_rate_hz();
    if fs <= MIN_CLEAN_FS_HZ {
        return Err(Error::InvalidSpec(format!(
            "EMG cleaning needs fs > {MIN_CLEAN_FS_HZ} Hz, got {fs}"
        )));
    }
    let notch = design_notch(50.0, 30.0, fs)?;
    let hp = design_butterworth(&FilterSpec::highpass(HIGHPASS_HZ, 4), fs)?;
    apply_filter(&apply_filter(raw, &notch, true)?, &hp, true)
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct EmgTimeFeatures {
    pub mav: f64,
    pub rms: f64,
    pub variance: f64,
    pub waveform_length: f64,
    pub zero_crossings: f64,
    pub slope_sign_changes: f64,
    pub integrated_emg: f64,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct EmgFreqFeatures {
    pub mean_freq_hz: f64,
    pub median_freq_hz: f64,
    pub peak_freq_hz: f64,
    pub band_power_20_450: f64,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct EmgFeatures {
    pub time: EmgTimeFeatures,
    pub freq: EmgFreqFeatures,
}

impl EmgFeatures {
    pub const NAMES: [&'static str; 11] = [
        "mav",
        "rms",
        "variance",
        "waveform_length",
        "zero_crossings",
        "slope_sign_changes",
        "integrated_emg",
        "mean_freq_hz",
        "median_freq_hz",
        "peak_freq_hz",
        "band_power_20_450",
    ];

    pub fn values(&self) -> [f64; 11] {
        let t = &self.time;
        let f = &self.freq;
        [
            t.mav,
            t.rms,
            t.variance,
            t.waveform_length,
            t.zero_crossings,
            t.slope_sign_changes,
            t.integrated_emg,
            f.mean_freq_hz,
            f.median_freq_hz,
            f.peak_freq_hz,
            f.band_power_20_450,
        ]
    }
}

pub fn emg_time_features(sig: &SampledSignal) -> Result<EmgTimeFeatures> {
    require(sig, MIN_TIME_WINDOW_S)?;
    let x = sig.samples();
    let n = x.len() as f64;
    let integrated: f64 = x.iter().map(|v| v.abs()).sum();
    let rms = (x.iter().map(|v| v * v).sum::<f64>() / n).sqrt();
    let thr = HYSTERESIS_FRACTION * rms;
    let zero_crossings = x
        .windows(2)
        .filter(|w| w[0] * w[1] < 0.0 && (w[0] - w[1]).abs() >= thr)
        .count();
    let slope_sign_changes = x
        .windows(3)
        .filter(|w| {
            let (a, b) = (w[1] - w[0], w[1] - w[2]);
            a * b > 0.0 && a.abs().max(b.abs()) >= thr
        })
        .count();
    Ok(EmgTimeFeatures {
        mav: integrated / n,
        rms,
        variance: stats::variance(x),
        waveform_length: x.windows(2).map(|w| (w[1] - w[0]).abs()).sum(),
        zero_crossings: zero_crossings as f64,
        slope_sign_changes: slope_sign_changes as f64,
        integrated_emg: integrated,
    })
}

/// Welch spectrum with 1 s Hann segments and 50% overlap. A window without
/// power yields all-zero frequency features.
pub fn emg_freq_features(sig: &SampledSignal) -> Result<EmgFreqFeatures> {
    require(sig, MIN_FREQ_WINDOW_S)?;
    let fs = sig.sampling_rate_hz();
    let nperseg = (fs.round() as usize).min(sig.len());
    let psd = welch(sig.samples(), fs, nperseg, nperseg / 2);
    Ok(spectrum_features(&psd, fs))
}

fn spectrum_features(psd: &Psd, fs: f64) -> EmgFreqFeatures {
    let p = &psd.density;
    let f = &psd.freqs_hz;
    let total: f64 = p.iter().sum();
    if !(total > 0.0) {
        return EmgFreqFeatures::default();
    }
    let mean_freq_hz = f.iter().zip(p).map(|(f, p)| f * p).sum::<f64>() / total;
    let peak = p
        .iter()
        .enumerate()
        .fold(0, |best, (i, v)| if *v > p[best] { i } else { best });
    // Each bin covers [f - df/2, f + df/2); interpolate within the bin that
    // crosses half the cumulative power.
    let df = psd.resolution_hz();
    let half = total / 2.0;
    let mut acc = 0.0;
    let mut median_freq_hz = f[f.len() - 1];
    for (fk, pk) in f.iter().zip(p) {
        if acc + pk >= half {
            let frac = if *pk > 0.0 { (half - acc) / pk } else { 0.0 };
            median_freq_hz = (fk - df / 2.0 + frac * df).max(0.0);
            break;
        }
        acc += pk;
    }
    let (lo, hi) = BAND_POWER_RANGE_HZ;
    EmgFreqFeatures {
        mean_freq_hz,
        median_freq_hz,
        peak_freq_hz: f[peak],
        band_power_20_450: psd.band_power(lo, hi.min(fs / 2.0 + df)),
    }
}

pub fn emg_features(sig: &SampledSignal) -> Result<EmgFeatures> {
    Ok(EmgFeatures {
        time: emg_time_features(sig)?,
        freq: emg_freq_features(sig)?,
    })
}

fn require(sig: &SampledSignal, min_s: f64) -> Result<()> {
    if sig.duration_s() + 1e-9 < min_s {
        return Err(Error::Data(format!(
            "EMG window of {:.3} s is shorter than {min_s} s",
            sig.duration_s()
        )));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::signals::ChannelId;
    use crate::synth::band_limited_noise;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    fn emg(fs: f64, x: Vec<f64>) -> SampledSignal {
        SampledSignal::new(ChannelId::Emg, fs, 0.0, x).unwrap()
    }

    fn sine(f: f64, fs: f64, seconds: f64) -> Vec<f64> {
        (0..(fs * seconds) as usize)
            .map(|i| (2.0 * PI * f * i as f64 / fs).sin())
            .collect()
    }

    fn tone_gain_db(f: f64) -> f64 {
        let fs = 1000.0;
        let x = sine(f, fs, 4.0);
        let y = clean_emg(&emg(fs, x.clone())).unwrap();
        // ignore one second at each edge
        let rms = |v: &[f64]| (v.iter().map(|a| a * a).sum::<f64>() / v.len() as f64).sqrt();
        20.0 * (rms(&y.samples()[1000..3000]) / rms(&x[1000..3000])).log10()
    }

    #[test]
    fn cleaning_profile() {
        assert!(tone_gain_db(50.0) <= -40.0);
        assert!(tone_gain_db(100.0).abs() <= 1.0);
        let dc = clean_emg(&emg(1000.0, vec![1.0; 3000])).unwrap();
        assert!(stats::mean(dc.samples()).abs() < 1e-3);
        assert!(clean_emg(&emg(100.0, vec![0.0; 300])).is_err());
    }

    #[test]
    fn zero_signal_gives_zero_features() {
        let f = emg_features(&emg(1000.0, vec![0.0; 2000])).unwrap();
        assert!(f.values().iter().all(|v| *v == 0.0));
    }

    #[test]
    fn time_features_scale_linearly() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let x = band_limited_noise(2000, 1000.0, 20.0, 200.0, &mut rng);
        let a = emg_time_features(&emg(1000.0, x.clone())).unwrap();
        let b = emg_time_features(&emg(1000.0, x.iter().map(|v| 2.0 * v).collect())).unwrap();
        assert!((b.mav - 2.0 * a.mav).abs() < 1e-12);
        assert!((b.rms - 2.0 * a.rms).abs() < 1e-12);
        assert!((b.waveform_length - 2.0 * a.waveform_length).abs() < 1e-9);
        assert_eq!(a.zero_crossings, b.zero_crossings);
        assert_eq!(a.slope_sign_changes, b.slope_sign_changes);
    }

    #[test]
    fn square_wave_crossings() {
        let x: Vec<f64> = (0..1000)
            .map(|i| if ((i + 25) / 50) % 2 == 0 { 1.0 } else { -1.0 })
            .collect();
        let f = emg_time_features(&emg(1000.0, x)).unwrap();
        assert_eq!(f.zero_crossings, 20.0);
        assert!(emg_time_features(&emg(1000.0, vec![1.0; 400])).is_err());
    }

    #[test]
    fn tone_spectrum() {
        let f = emg_freq_features(&emg(1000.0, sine(100.0, 1000.0, 4.0))).unwrap();
        assert!((f.median_freq_hz - 100.0).abs() <= 2.0, "{f:?}");
        assert!((f.peak_freq_hz - 100.0).abs() <= 1.0);
        let total = 0.5;
        assert!(f.band_power_20_450 <= total + 1e-9);
        assert!(emg_freq_features(&emg(1000.0, vec![0.0; 900])).is_err());
    }

    #[test]
    fn flat_band_median_and_two_tone_centroid() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let noise = band_limited_noise(10_000, 1000.0, 20.0, 200.0, &mut rng);
        let f = emg_freq_features(&emg(1000.0, noise)).unwrap();
        assert!((f.median_freq_hz - 110.0).abs() <= 10.0, "{f:?}");

        let two: Vec<f64> = sine(60.0, 1000.0, 4.0)
            .iter()
            .zip(sine(180.0, 1000.0, 4.0))
            .map(|(a, b)| a + b)
            .collect();
        let g = emg_freq_features(&emg(1000.0, two)).unwrap();
        assert!((g.mean_freq_hz - 120.0).abs() <= 3.0, "{g:?}");
    }

    #[test]
    fn spectral_features_ignore_amplitude_and_track_center() {
        let mut last = 0.0;
        for center in [60.0, 90.0, 120.0, 150.0, 180.0] {
            let mut rng = ChaCha8Rng::seed_from_u64(center as u64);
            let x = band_limited_noise(4000, 1000.0, center - 20.0, center + 20.0, &mut rng);
            let a = emg_freq_features(&emg(1000.0, x.clone())).unwrap();
            let b = emg_freq_features(&emg(1000.0, x.iter().map(|v| 7.5 * v).collect())).unwrap();
            assert!((a.median_freq_hz - b.median_freq_hz).abs() <= 1.0);
            assert!((a.mean_freq_hz - b.mean_freq_hz).abs() <= 1.0);
            assert!(a.median_freq_hz > last);
            last = a.median_freq_hz;
        }
    }
}
