use statrs::distribution::{ContinuousCDF, Normal, StudentsT};

use crate::error::{AppError, AppResult};

pub fn mean(x: &[f64]) -> f64 {
    x.iter().sum::<f64>() / x.len() as f64
}

/// Unbiased sample variance.
pub fn sample_variance(x: &[f64]) -> f64 {
    let m = mean(x);
    x.iter().map(|v| (v - m).powi(2)).sum::<f64>() / (x.len() as f64 - 1.0)
}

/// Standard error of the mean.
pub fn standard_error(x: &[f64]) -> f64 {
    (sample_variance(x) / x.len() as f64).sqrt()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinearFit {
    pub slope: f64,
    pub intercept: f64,
    pub slope_stderr: f64,
    /// 95% interval for the slope from the Student t quantile.
    pub ci: (f64, f64),
}

/// Ordinary least squares `y = a + b x`.
pub fn ols(x: &[f64], y: &[f64]) -> AppResult<LinearFit> {
    let n = x.len();
    if n != y.len() || n < 3 {
        return Err(AppError::Statistics { what: format!("least squares needs at least 3 points, got {n}") });
    }
    let (mx, my) = (mean(x), mean(y));
    let sxx: f64 = x.iter().map(|v| (v - mx).powi(2)).sum();
    if sxx == 0.0 {
        return Err(AppError::Statistics { what: "least squares with constant abscissa".into() });
    }
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let rss: f64 = x.iter().zip(y).map(|(a, b)| (b - intercept - slope * a).powi(2)).sum();
    let df = (n - 2) as f64;
    let slope_stderr = (rss / df / sxx).sqrt();
    let t = StudentsT::new(0.0, 1.0, df).expect("positive degrees of freedom").inverse_cdf(0.975);
    Ok(LinearFit { slope, intercept, slope_stderr, ci: (slope - t * slope_stderr, slope + t * slope_stderr) })
}

/// `sup |F_n - Φ_σ|` against the centered Gaussian with variance `variance`.
pub fn ks_statistic(samples: &[f64], variance: f64) -> f64 {
    let mut x = samples.to_vec();
    x.sort_by(f64::total_cmp);
    let n = x.len() as f64;
    let normal = Normal::new(0.0, variance.sqrt()).expect("positive variance");
    let mut d: f64 = 0.0;
    for (i, &v) in x.iter().enumerate() {
        let f = normal.cdf(v);
        d = d.max((i as f64 + 1.0) / n - f).max(f - i as f64 / n);
    }
    d
}

fn mat_mul(a: &[f64], b: &[f64], m: usize) -> Vec<f64> {
    let mut c = vec![0.0; m * m];
    for i in 0..m {
        for k in 0..m {
            let aik = a[i * m + k];
            if aik == 0.0 {
                continue;
            }
            for j in 0..m {
                c[i * m + j] += aik * b[k * m + j];
            }
        }
    }
    c
}

/// `a^p` with a decimal exponent kept aside to avoid overflow.
fn mat_pow(a: &[f64], m: usize, p: usize) -> (Vec<f64>, i32) {
    if p == 1 {
        return (a.to_vec(), 0);
    }
    let (half, e) = mat_pow(a, m, p / 2);
    let mut v = mat_mul(&half, &half, m);
    let mut ev = 2 * e;
    if p % 2 == 1 {
        v = mat_mul(a, &v, m);
    }
    if v[(m / 2) * m + m / 2] > 1e140 {
        v.iter_mut().for_each(|x| *x *= 1e-140);
        ev += 140;
    }
    (v, ev)
}

/// `P(D_n < d)` for the one-sample Kolmogorov statistic, by the
/// Marsaglia–Tsang–Wang matrix method. Exact up to rounding except in the
/// far upper tail (`n d² > 7.24`, or `> 3.76` with `n > 99`), where the
/// published asymptotic shortcut is used.
pub fn kolmogorov_cdf(n: usize, d: f64) -> f64 {
    if d <= 0.0 {
        return 0.0;
    }
    if d >= 1.0 {
        return 1.0;
    }
    let nf = n as f64;
    let s = d * d * nf;
    if s > 7.24 || (s > 3.76 && n > 99) {
        return 1.0 - 2.0 * (-(2.000071 + 0.331 / nf.sqrt() + 1.409 / nf) * s).exp();
    }
    let k = (nf * d) as usize + 1;
    let m = 2 * k - 1;
    let h = k as f64 - nf * d;
    let mut hm = vec![0.0; m * m];
    for i in 0..m {
        for j in 0..m {
            hm[i * m + j] = if i + 1 >= j { 1.0 } else { 0.0 };
        }
    }
    for i in 0..m {
        hm[i * m] -= h.powi(i as i32 + 1);
        hm[(m - 1) * m + i] -= h.powi((m - i) as i32);
    }
    if 2.0 * h - 1.0 > 0.0 {
        hm[(m - 1) * m] += (2.0 * h - 1.0).powi(m as i32);
    }
    for i in 0..m {
        for j in 0..m {
            if i + 1 > j {
                for g in 1..=(i + 1 - j) {
                    hm[i * m + j] /= g as f64;
                }
            }
        }
    }
    let (q, mut eq) = mat_pow(&hm, m, n);
    let mut s = q[(k - 1) * m + k - 1];
    for i in 1..=n {
        s = s * i as f64 / nf;
        if s < 1e-140 {
            s *= 1e140;
            eq -= 140;
        }
    }
    (s * 10f64.powi(eq)).clamp(0.0, 1.0)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NormalityTest {
    pub statistic: f64,
    pub p_value: f64,
}

pub const MIN_NORMALITY_SAMPLES: usize = 200;

/// KS test of `samples` against `N(0, variance)`.
pub fn normality_test(samples: &[f64], variance: f64) -> AppResult<NormalityTest> {
    if samples.len() < MIN_NORMALITY_SAMPLES {
        return Err(AppError::Statistics {
            what: format!("normality test needs at least {MIN_NORMALITY_SAMPLES} samples, got {}", samples.len()),
        });
    }
    if !(variance > 0.0) {
        return Err(AppError::Statistics { what: format!("reference variance {variance} is not positive") });
    }
    let statistic = ks_statistic(samples, variance);
    let p_value = 1.0 - kolmogorov_cdf(samples.len(), statistic);
    Ok(NormalityTest { statistic, p_value })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kolmogorov_reference_values() {
        // Exact values: the same matrix recursion in rational arithmetic. scipy's
        // kstwo agrees for n <= 100 but is approximate at n = 200.
        for (n, d, want) in [
            (10, 0.274, 0.6284796154565043),
            (100, 0.1, 0.7473072429936098),
            (200, 0.05, 0.3197372745604424),
            (200, 0.12, 0.9942542395071674),
        ] {
            assert!((kolmogorov_cdf(n, d) - want).abs() < 1e-12, "n={n} d={d}");
        }
        assert_eq!(kolmogorov_cdf(5, 0.0), 0.0);
        assert_eq!(kolmogorov_cdf(5, 1.0), 1.0);
    }

    #[test]
    fn exact_single_sample_law() {
        // For n = 1, D = max(F, 1 - F) with F uniform: P(D < d) = 2d - 1.
        for d in [0.55, 0.7, 0.9] {
            assert!((kolmogorov_cdf(1, d) - (2.0 * d - 1.0)).abs() < 1e-12);
        }
    }

    #[test]
    fn ols_recovers_exact_lines() {
        let x: Vec<f64> = (0..6).map(|i| i as f64).collect();
        let y: Vec<f64> = x.iter().map(|v| 2.0 - 0.5 * v).collect();
        let fit = ols(&x, &y).unwrap();
        assert!((fit.slope + 0.5).abs() < 1e-14 && (fit.intercept - 2.0).abs() < 1e-14);
        assert!(fit.slope_stderr < 1e-12);
        assert!(ols(&[1.0, 1.0, 1.0], &[0.0, 1.0, 2.0]).is_err());
    }

    #[test]
    fn degenerate_samples_are_rejected() {
        assert!(normality_test(&[0.0; 300], 1.0).unwrap().p_value < 1e-12);
        assert!(normality_test(&[0.0; 10], 1.0).is_err());
    }
}
