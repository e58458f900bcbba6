use serde::{Deserialize, Serialize};

use super::SampledSignal;
use crate::error::{Error, Result};

/// How a block is cut into examples: fixed windows with a stride, or the
/// whole block as a single slice.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum WindowPlan {
    Windowed { window_s: f64, stride_s: f64 },
    FullBlock,
}

impl WindowPlan {
    /// Non-overlapping windows of `window_s`.
    pub fn windowed(window_s: f64) -> Self {
        WindowPlan::Windowed {
            window_s,
            stride_s: window_s,
        }
    }

    pub fn with_stride(window_s: f64, stride_s: f64) -> Result<Self> {
        let plan = WindowPlan::Windowed { window_s, stride_s };
        plan.validate()?;
        Ok(plan)
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            WindowPlan::FullBlock => Ok(()),
            WindowPlan::Windowed { window_s, stride_s } => {
                if !(window_s.is_finite() && window_s > 0.0) {
                    return Err(Error::Contract(format!(
                        "window {window_s} s must be positive"
                    )));
                }
                if !(stride_s.is_finite() && stride_s > 0.0 && stride_s <= window_s) {
                    return Err(Error::Contract(format!(
                        "stride {stride_s} s must be in (0, window = {window_s}]"
                    )));
                }
                Ok(())
            }
        }
    }

    /// Short label used in reports: `5s`, `10s`, `full`.
    pub fn label(&self) -> String {
        match *self {
            WindowPlan::FullBlock => "full".to_string(),
            WindowPlan::Windowed { window_s, stride_s } if stride_s == window_s => {
                format!("{window_s}s")
            }
            WindowPlan::Windowed { window_s, stride_s } => format!("{window_s}s/{stride_s}s"),
        }
    }

    /// `(start, len)` sample ranges for a signal of `n` samples at `fs`.
    pub fn ranges(&self, n: usize, fs: f64) -> Result<Vec<(usize, usize)>> {
        self.validate()?;
        match *self {
            WindowPlan::FullBlock => Ok(vec![(0, n)]),
            WindowPlan::Windowed { window_s, stride_s } => {
                let w = (window_s * fs).round() as usize;
                let s = ((stride_s * fs).round() as usize).max(1);
                if w == 0 || n < w {
                    return Err(Error::EmptySlice {
                        duration_s: n as f64 / fs,
                        window_s,
                    });
                }
                let count = (n - w) / s + 1;
                Ok((0..count).map(|i| (i * s, w)).collect())
            }
        }
    }
}

impl WindowPlan {
    /// `(start_s, end_s)` windows, relative to block start, over a block of
    /// `duration_s`.
    pub fn time_ranges(&self, duration_s: f64) -> Result<Vec<(f64, f64)>> {
        self.validate()?;
        match *self {
            WindowPlan::FullBlock => Ok(vec![(0.0, duration_s)]),
            WindowPlan::Windowed { window_s, stride_s } => {
                if duration_s + 1e-9 < window_s {
                    return Err(Error::EmptySlice {
                        duration_s,
                        window_s,
                    });
                }
                let count = ((duration_s - window_s) / stride_s + 1e-9).floor() as usize + 1;
                Ok((0..count)
                    .map(|i| {
                        let start = i as f64 * stride_s;
                        (start, start + window_s)
                    })
                    .collect())
            }
        }
    }
}

/// Cuts a signal into windows; trailing partial windows are dropped.
pub fn slice_windows(signal: &SampledSignal, plan: &WindowPlan) -> Result<Vec<SampledSignal>> {
    plan.ranges(signal.len(), signal.sampling_rate_hz())?
        .into_iter()
        .map(|(start, len)| signal.slice(start, start + len))
        .collect()
}
