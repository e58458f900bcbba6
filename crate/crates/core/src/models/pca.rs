use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Principal axes of a centered training matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PcaModel {
    pub mean: Vec<f64>,
    /// `k x d`, orthonormal rows, strongest first.
    pub components: Vec<Vec<f64>>,
    pub explained_variance: Vec<f64>,
    pub k: usize,
    /// Set when the requested `k` had to be reduced.
    pub warning: Option<String>,
}

/// SVD of the centered matrix; `k` is clamped to `min(rows - 1, cols)`.
pub fn fit_pca(rows: &[Vec<f64>], k: usize) -> Result<PcaModel> {
    let n = rows.len();
    if n < 2 {
        return Err(Error::Training(format!("PCA needs >= 2 rows, got {n}")));
    }
    let d = rows[0].len();
    if d == 0 || rows.iter().any(|r| r.len() != d) {
        return Err(Error::Training(
            "PCA needs a non-empty rectangular matrix".into(),
        ));
    }
    if k == 0 {
        return Err(Error::Training("PCA needs k >= 1".into()));
    }
    let max_k = (n - 1).min(d);
    let warning = (k > max_k).then(|| {
        let msg = format!("requested {k} components but only {max_k} are available; clamped");
        log::warn!("{msg}");
        msg
    });
    let k = k.min(max_k);

    let mut mean = vec![0.0; d];
    for r in rows {
        for (m, v) in mean.iter_mut().zip(r) {
            *m += v / n as f64;
        }
    }
    let centered = DMatrix::from_fn(n, d, |i, j| rows[i][j] - mean[j]);
    let svd = centered.svd(false, true);
    let v_t = svd
        .v_t
        .ok_or_else(|| Error::Training("SVD did not converge".into()))?;
    let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
    order.sort_by(|&a, &b| {
        svd.singular_values[b]
            .total_cmp(&svd.singular_values[a])
            .then(a.cmp(&b))
    });

    let mut components = Vec::with_capacity(k);
    let mut explained_variance = Vec::with_capacity(k);
    for &idx in order.iter().take(k) {
        let mut row: Vec<f64> = v_t.row(idx).iter().copied().collect();
        // sign convention: largest-magnitude loading is positive
        let pivot = row
            .iter()
            .copied()
            .fold(0.0f64, |a, v| if v.abs() > a.abs() { v } else { a });
        if pivot < 0.0 {
            row.iter_mut().for_each(|v| *v = -*v);
        }
        components.push(row);
        explained_variance.push(svd.singular_values[idx].powi(2) / (n - 1) as f64);
    }
    Ok(PcaModel {
        mean,
        components,
        explained_variance,
        k,
        warning,
    })
}

impl PcaModel {
    pub fn project_row(&self, row: &[f64]) -> Vec<f64> {
        self.components
            .iter()
            .map(|c| {
                c.iter()
                    .zip(row.iter().zip(&self.mean))
                    .map(|(w, (v, m))| w * (v - m))
                    .sum()
            })
            .collect()
    }

    pub fn project(&self, rows: &[Vec<f64>]) -> Result<Vec<Vec<f64>>> {
        rows.iter()
            .map(|r| {
                if r.len() != self.mean.len() {
                    return Err(Error::Contract(format!(
                        "row has {} columns, PCA expects {}",
                        r.len(),
                        self.mean.len()
                    )));
                }
                Ok(self.project_row(r))
            })
            .collect()
    }

    /// Maps projected coordinates back to the input space.
    pub fn reconstruct_row(&self, z: &[f64]) -> Vec<f64> {
        let mut out = self.mean.clone();
        for (c, zi) in self.components.iter().zip(z) {
            for (o, w) in out.iter_mut().zip(c) {
                *o += zi * w;
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use rand_distr::StandardNormal;

    fn gaussian_rows(n: usize, d: usize, seed: u64) -> Vec<Vec<f64>> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n)
            .map(|_| {
                (0..d)
                    .map(|_| rng.sample::<f64, _>(StandardNormal))
                    .collect()
            })
            .collect()
    }

    #[test]
    fn components_are_orthonormal_and_sorted() {
        let rows = gaussian_rows(200, 12, 1);
        let m = fit_pca(&rows, 6).unwrap();
        for (i, a) in m.components.iter().enumerate() {
            for (j, b) in m.components.iter().enumerate() {
                let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
                let expected = if i == j { 1.0 } else { 0.0 };
                assert!((dot - expected).abs() <= 1e-8);
            }
        }
        assert!(m.explained_variance.windows(2).all(|w| w[0] >= w[1]));
    }

    #[test]
    fn k_is_clamped_with_a_warning() {
        let m = fit_pca(&gaussian_rows(10, 4, 2), 189).unwrap();
        assert_eq!(m.k, 4);
        assert!(m.warning.is_some());
        let m = fit_pca(&gaussian_rows(5, 40, 2), 189).unwrap();
        assert_eq!(m.k, 4);
    }
}
