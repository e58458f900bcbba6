use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Per-column train-set mean and standard deviation.
///
/// NaN marks a missing value: it is ignored when fitting and replaced by the
/// column mean (zero after transformation) when transforming. Constant or
/// entirely missing columns get `std = 1` and a zero-variance flag.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StandardizationParams {
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
    pub zero_variance: Vec<bool>,
}

impl StandardizationParams {
    pub fn width(&self) -> usize {
        self.mean.len()
    }

    pub fn transform_row(&self, row: &[f64]) -> Vec<f64> {
        row.iter()
            .zip(self.mean.iter().zip(&self.std))
            .map(|(v, (m, s))| if v.is_nan() { 0.0 } else { (v - m) / s })
            .collect()
    }

    pub fn transform(&self, rows: &[Vec<f64>]) -> Result<Vec<Vec<f64>>> {
        rows.iter()
            .map(|r| {
                if r.len() != self.width() {
                    return Err(Error::Contract(format!(
                        "row has {} columns, expected {}",
                        r.len(),
                        self.width()
                    )));
                }
                Ok(self.transform_row(r))
            })
            .collect()
    }
}

pub fn fit_standardizer(rows: &[Vec<f64>]) -> Result<StandardizationParams> {
    if rows.len() < 2 {
        return Err(Error::Training(format!(
            "standardization needs >= 2 rows, got {}",
            rows.len()
        )));
    }
    let d = rows[0].len();
    if d == 0 || rows.iter().any(|r| r.len() != d) {
        return Err(Error::Training(
            "standardization needs a non-empty rectangular matrix".into(),
        ));
    }
    let mut sum = vec![0.0; d];
    let mut count = vec![0usize; d];
    for r in rows {
        for (j, v) in r.iter().enumerate() {
            if !v.is_nan() {
                sum[j] += v;
                count[j] += 1;
            }
        }
    }
    let mean: Vec<f64> = sum
        .iter()
        .zip(&count)
        .map(|(s, &c)| if c > 0 { s / c as f64 } else { 0.0 })
        .collect();
    let mut ss = vec![0.0; d];
    for r in rows {
        for (j, v) in r.iter().enumerate() {
            if !v.is_nan() {
                ss[j] += (v - mean[j]).powi(2);
            }
        }
    }
    let mut std = Vec::with_capacity(d);
    let mut zero_variance = Vec::with_capacity(d);
    for j in 0..d {
        let s = if count[j] > 0 {
            (ss[j] / count[j] as f64).sqrt()
        } else {
            0.0
        };
        // relative floor so float noise in a constant column is not amplified
        let flat = !(s > 1e-12 * mean[j].abs().max(1e-300));
        zero_variance.push(flat);
        std.push(if flat { 1.0 } else { s });
    }
    Ok(StandardizationParams {
        mean,
        std,
        zero_variance,
    })
}
