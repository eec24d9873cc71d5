//! Small statistics toolbox for the Monte Carlo checks.

use statrs::distribution::{ChiSquared, ContinuousCDF};

/// Sample mean and `sd / sqrt(len)` with the unbiased variance.
pub fn mean_and_stderr(values: &[f64]) -> (f64, f64) {
    let len = values.len() as f64;
    if values.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let mean = values.iter().sum::<f64>() / len;
    if values.len() < 2 {
        return (mean, f64::NAN);
    }
    let ss: f64 = values.iter().map(|v| (v - mean) * (v - mean)).sum();
    (mean, (ss / (len - 1.0)).sqrt() / len.sqrt())
}

/// Standard error of a frequency `p` estimated from `trials` Bernoulli draws.
pub fn binomial_stderr(p: f64, trials: usize) -> f64 {
    (p * (1.0 - p) / trials as f64).sqrt()
}

/// Linear-interpolation quantile of sorted data.
pub fn quantile(sorted: &[f64], p: f64) -> f64 {
    assert!(!sorted.is_empty());
    let h = p * (sorted.len() - 1) as f64;
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(sorted.len() - 1);
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

/// Order-statistic standard error of the `p` quantile: half the width of the
/// distribution-free 95% interval, divided by 1.96.
pub fn quantile_stderr(sorted: &[f64], p: f64) -> f64 {
    let n = sorted.len() as f64;
    let spread = 1.96 * (n * p * (1.0 - p)).sqrt();
    let idx = |r: f64| (r.round().max(0.0) as usize).min(sorted.len() - 1);
    let lo = sorted[idx(n * p - spread)];
    let hi = sorted[idx(n * p + spread)];
    (hi - lo) / (2.0 * 1.96)
}

/// Kolmogorov-Smirnov distance between sorted data and a distribution
/// function whose values are known up to `cdf(x).1`.
///
/// Returns the statistic and the largest error bound met along the way.
pub fn ks_statistic(sorted: &[f64], mut cdf: impl FnMut(f64) -> (f64, f64)) -> (f64, f64) {
    let n = sorted.len() as f64;
    let mut d: f64 = 0.0;
    let mut worst_error: f64 = 0.0;
    for (i, &x) in sorted.iter().enumerate() {
        let (f, err) = cdf(x);
        worst_error = worst_error.max(err);
        let above = (i + 1) as f64 / n - f;
        let below = f - i as f64 / n;
        d = d.max(above).max(below);
    }
    (d, worst_error)
}

/// Asymptotic p-value of the one-sample KS statistic, with Stephens'
/// finite-sample correction.
pub fn kolmogorov_pvalue(n: usize, d: f64) -> f64 {
    let sqrt_n = (n as f64).sqrt();
    let lambda = (sqrt_n + 0.12 + 0.11 / sqrt_n) * d;
    if lambda < 0.2 {
        return 1.0;
    }
    let mut sum = 0.0;
    for k in 1..=100 {
        let k = k as f64;
        let term = (-2.0 * k * k * lambda * lambda).exp();
        sum += if k as u32 % 2 == 1 { term } else { -term };
        if term < 1e-18 {
            break;
        }
    }
    (2.0 * sum).clamp(0.0, 1.0)
}

/// Dvoretzky-Kiefer-Wolfowitz radius at confidence `1 - alpha`.
pub fn dkw_radius(n: usize, alpha: f64) -> f64 {
    ((2.0 / alpha).ln() / (2.0 * n as f64)).sqrt()
}

/// Pearson statistic of observed counts against equal cell probabilities.
pub fn pearson_uniform(counts: &[u64]) -> f64 {
    let total: u64 = counts.iter().sum();
    let expected = total as f64 / counts.len() as f64;
    counts
        .iter()
        .map(|&c| {
            let diff = c as f64 - expected;
            diff * diff / expected
        })
        .sum()
}

/// Pearson statistic of observed counts against expected counts.
pub fn pearson(observed: &[u64], expected: &[f64]) -> f64 {
    observed
        .iter()
        .zip(expected)
        .filter(|(_, &e)| e > 0.0)
        .map(|(&o, &e)| (o as f64 - e) * (o as f64 - e) / e)
        .sum()
}

/// Upper tail `P(chi2_df >= stat)`.
pub fn chi_square_sf(stat: f64, df: f64) -> f64 {
    let dist = ChiSquared::new(df).expect("positive degrees of freedom");
    dist.sf(stat)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LineFit {
    pub slope: f64,
    pub intercept: f64,
    pub slope_stderr: f64,
}

/// Ordinary least squares of `y` on `x`.
pub fn ols(x: &[f64], y: &[f64]) -> LineFit {
    assert_eq!(x.len(), y.len());
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let rss: f64 = x
        .iter()
        .zip(y)
        .map(|(a, b)| {
            let r = b - intercept - slope * a;
            r * r
        })
        .sum();
    let slope_stderr = if x.len() > 2 {
        (rss / (n - 2.0) / sxx).sqrt()
    } else {
        f64::NAN
    };
    LineFit {
        slope,
        intercept,
        slope_stderr,
    }
}

/// Fit of `ln y` against `ln x`.
pub fn log_log_fit(x: &[f64], y: &[f64]) -> LineFit {
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    ols(&lx, &ly)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mean_stderr() {
        let (m, se) = mean_and_stderr(&[1.0, 2.0, 3.0, 4.0]);
        assert_eq!(m, 2.5);
        assert!((se - (5.0f64 / 3.0).sqrt() / 2.0).abs() < 1e-15);
        assert!(mean_and_stderr(&[1.0]).1.is_nan());
    }

    #[test]
    fn quantiles() {
        let data: Vec<f64> = (0..=100).map(|i| i as f64).collect();
        assert_eq!(quantile(&data, 0.5), 50.0);
        assert_eq!(quantile(&data, 0.05), 5.0);
        assert_eq!(quantile(&data, 1.0), 100.0);
        assert!(quantile_stderr(&data, 0.5) > 0.0);
    }

    #[test]
    fn kolmogorov_tail() {
        // P(sqrt(n) D > 1.358) is about 0.05 for large n
        let p = kolmogorov_pvalue(1_000_000, 1.358 / 1000.0);
        assert!((p - 0.05).abs() < 2e-3, "{p}");
        assert_eq!(kolmogorov_pvalue(100, 0.0), 1.0);
        assert!(kolmogorov_pvalue(100, 0.5) < 1e-15);
    }

    #[test]
    fn ks_against_uniform() {
        let data: Vec<f64> = (0..1000).map(|i| (i as f64 + 0.5) / 1000.0).collect();
        let (d, err) = ks_statistic(&data, |x| (x, 0.0));
        assert!((d - 0.0005).abs() < 1e-12);
        assert_eq!(err, 0.0);
    }

    #[test]
    fn chi_square_tail() {
        assert!((chi_square_sf(3.841_458_820_694_124, 1.0) - 0.05).abs() < 1e-9);
        assert_eq!(pearson_uniform(&[5, 5, 5, 5]), 0.0);
        assert_eq!(pearson_uniform(&[6, 4]), 0.4);
        assert_eq!(pearson(&[6, 4], &[5.0, 5.0]), 0.4);
    }

    #[test]
    fn line_fit() {
        let x = [1.0, 2.0, 4.0, 8.0];
        let y: Vec<f64> = x.iter().map(|v: &f64| 3.0 * v.powf(-1.5)).collect();
        let fit = log_log_fit(&x, &y);
        assert!((fit.slope + 1.5).abs() < 1e-12);
        assert!((fit.intercept - 3f64.ln()).abs() < 1e-12);
        assert!(fit.slope_stderr < 1e-12);
    }
}
