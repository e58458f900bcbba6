//! Small descriptive-statistics helpers shared by the feature extractors.

pub fn mean(x: &[f64]) -> f64 {
    if x.is_empty() {
        return f64::NAN;
    }
    x.iter().sum::<f64>() / x.len() as f64
}

/// Population variance.
pub fn variance(x: &[f64]) -> f64 {
    if x.is_empty() {
        return f64::NAN;
    }
    let m = mean(x);
    x.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / x.len() as f64
}

/// Population standard deviation.
pub fn std_dev(x: &[f64]) -> f64 {
    variance(x).sqrt()
}

pub fn median(x: &[f64]) -> f64 {
    if x.is_empty() {
        return f64::NAN;
    }
    let mut v = x.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

/// Median absolute deviation from the median (unscaled).
pub fn mad(x: &[f64]) -> f64 {
    let m = median(x);
    let dev: Vec<f64> = x.iter().map(|v| (v - m).abs()).collect();
    median(&dev)
}

pub fn min(x: &[f64]) -> f64 {
    x.iter().copied().fold(f64::INFINITY, f64::min)
}

pub fn max(x: &[f64]) -> f64 {
    x.iter().copied().fold(f64::NEG_INFINITY, f64::max)
}

/// Population skewness; 0 for constant input.
pub fn skewness(x: &[f64]) -> f64 {
    let m = mean(x);
    let var = variance(x);
    if !(var > 0.0) {
        return 0.0;
    }
    let m3 = x.iter().map(|v| (v - m).powi(3)).sum::<f64>() / x.len() as f64;
    m3 / var.powf(1.5)
}

/// Excess kurtosis (population); 0 for constant input.
pub fn kurtosis(x: &[f64]) -> f64 {
    let m = mean(x);
    let var = variance(x);
    if !(var > 0.0) {
        return 0.0;
    }
    let m4 = x.iter().map(|v| (v - m).powi(4)).sum::<f64>() / x.len() as f64;
    m4 / (var * var) - 3.0
}

/// Least-squares slope of `y` against `t`.
pub fn ls_slope(t: &[f64], y: &[f64]) -> f64 {
    let n = t.len().min(y.len());
    if n < 2 {
        return 0.0;
    }
    let mt = mean(&t[..n]);
    let my = mean(&y[..n]);
    let mut num = 0.0;
    let mut den = 0.0;
    for i in 0..n {
        num += (t[i] - mt) * (y[i] - my);
        den += (t[i] - mt) * (t[i] - mt);
    }
    if den > 0.0 {
        num / den
    } else {
        0.0
    }
}

/// Centered moving average of odd-ish width `w`; edges average over the
/// available samples.
pub fn moving_average(x: &[f64], w: usize) -> Vec<f64> {
    let n = x.len();
    if n == 0 || w <= 1 {
        return x.to_vec();
    }
    let half_lo = (w - 1) / 2;
    let half_hi = w - 1 - half_lo;
    let mut prefix = Vec::with_capacity(n + 1);
    prefix.push(0.0);
    let mut acc = 0.0;
    for v in x {
        acc += v;
        prefix.push(acc);
    }
    (0..n)
        .map(|i| {
            let lo = i.saturating_sub(half_lo);
            let hi = (i + half_hi + 1).min(n);
            (prefix[hi] - prefix[lo]) / (hi - lo) as f64
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn basic_statistics() {
        let x = [600.0, 700.0, 800.0];
        assert_eq!(mean(&x), 700.0);
        assert!((std_dev(&x) - 81.649_658_092_772_6).abs() < 1e-9);
        assert_eq!(median(&[3.0, 1.0, 2.0, 4.0]), 2.5);
        assert_eq!(mad(&[1.0, 1.0, 2.0, 2.0, 4.0, 6.0, 9.0]), 1.0);
        assert_eq!(skewness(&[2.0; 5]), 0.0);
        assert!(skewness(&[0.0, 0.0, 0.0, 10.0]) > 0.0);
        assert!((kurtosis(&[-1.0, 1.0]) + 2.0).abs() < 1e-12);
    }

    #[test]
    fn slope_of_exact_line() {
        let t: Vec<f64> = (0..100).map(|i| i as f64 * 0.25).collect();
        let y: Vec<f64> = t.iter().map(|t| 2.0 + 0.01 * t).collect();
        assert!((ls_slope(&t, &y) - 0.01).abs() < 1e-12);
    }

    #[test]
    fn moving_average_preserves_constants() {
        let x = vec![3.0; 10];
        assert!(moving_average(&x, 4)
            .iter()
            .all(|v| (v - 3.0).abs() < 1e-12));
        assert_eq!(moving_average(&[0.0, 3.0, 0.0], 3), vec![1.5, 1.0, 1.5]);
    }
}
