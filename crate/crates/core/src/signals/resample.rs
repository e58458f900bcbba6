use super::{ChannelId, SampledSignal};
use crate::error::{Error, Result};

/// Linear interpolation of `(timestamps_s, values)` onto the uniform grid
/// `t0, t0 + 1/fs, ...` that ends at or before the last timestamp.
pub fn interpolate_uniform(
    timestamps_s: &[f64],
    values: &[f64],
    target_fs: f64,
) -> Result<Vec<f64>> {
    if timestamps_s.len() != values.len() {
        return Err(Error::Data(format!(
            "{} timestamps but {} values",
            timestamps_s.len(),
            values.len()
        )));
    }
    if timestamps_s.len() < 2 {
        return Err(Error::Data("interpolation needs at least 2 points".into()));
    }
    if !(target_fs.is_finite() && target_fs > 0.0) {
        return Err(Error::Data(format!(
            "target rate {target_fs} Hz must be positive"
        )));
    }
    if let Some(i) = timestamps_s.windows(2).position(|w| !(w[1] > w[0])) {
        return Err(Error::Data(format!(
            "timestamps not strictly increasing at index {}: {} -> {}",
            i + 1,
            timestamps_s[i],
            timestamps_s[i + 1]
        )));
    }
    let t0 = timestamps_s[0];
    let span = timestamps_s[timestamps_s.len() - 1] - t0;
    let n = (span * target_fs + 1e-9).floor() as usize + 1;
    let mut out = Vec::with_capacity(n);
    let mut seg = 0;
    for i in 0..n {
        let t = t0 + i as f64 / target_fs;
        while seg + 2 < timestamps_s.len() && timestamps_s[seg + 1] <= t {
            seg += 1;
        }
        let (ta, tb) = (timestamps_s[seg], timestamps_s[seg + 1]);
        let (va, vb) = (values[seg], values[seg + 1]);
        let frac = ((t - ta) / (tb - ta)).clamp(0.0, 1.0);
        out.push(if frac == 0.0 {
            va
        } else if frac == 1.0 {
            vb
        } else {
            va + (vb - va) * frac
        });
    }
    Ok(out)
}

/// Resamples irregular samples onto a uniform grid starting at the first
/// timestamp.
pub fn resample_uniform(
    channel: ChannelId,
    timestamps_s: &[f64],
    values: &[f64],
    target_fs: f64,
) -> Result<SampledSignal> {
    let samples = interpolate_uniform(timestamps_s, values, target_fs)?;
    SampledSignal::new(channel, target_fs, timestamps_s[0], samples)
}
