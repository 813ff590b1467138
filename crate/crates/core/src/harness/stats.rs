use crate::error::{Error, Result};

/// Two-sided 95% standard normal quantile.
pub const Z_95: f64 = 1.959964;

/// Sum in a fixed binary tree, independent of how the inputs were produced.
pub fn pairwise_sum(xs: &[f64]) -> f64 {
    if xs.len() <= 8 {
        xs.iter().sum()
    } else {
        let (a, b) = xs.split_at(xs.len() / 2);
        pairwise_sum(a) + pairwise_sum(b)
    }
}

pub fn mean(xs: &[f64]) -> f64 {
    pairwise_sum(xs) / xs.len() as f64
}

/// Sample variance with the `n - 1` denominator.
pub fn sample_variance(xs: &[f64]) -> f64 {
    let m = mean(xs);
    let dev: Vec<f64> = xs.iter().map(|x| (x - m) * (x - m)).collect();
    pairwise_sum(&dev) / (xs.len() - 1) as f64
}

/// Point estimate with a confidence interval.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Interval {
    pub estimate: f64,
    pub lo: f64,
    pub hi: f64,
}

/// Mean squared error with a normal interval on the squared errors:
/// `mean +- z sd / sqrt(K)`.
pub fn mse_with_ci(errors: &[f64], z: f64) -> Result<Interval> {
    if errors.len() < 2 {
        return Err(Error::TooFewSamples {
            needed: 2,
            got: errors.len(),
        });
    }
    let sq: Vec<f64> = errors.iter().map(|e| e * e).collect();
    let m = mean(&sq);
    let half = z * (sample_variance(&sq) / sq.len() as f64).sqrt();
    Ok(Interval {
        estimate: m,
        lo: m - half,
        hi: m + half,
    })
}

/// `mean(a) / mean(b)` for paired samples, with a delta-method interval.
pub fn ratio_with_ci(a: &[f64], b: &[f64], z: f64) -> Result<Interval> {
    if a.len() != b.len() {
        return Err(Error::InvalidParameter("ratio needs paired samples".into()));
    }
    let k = a.len();
    if k < 2 {
        return Err(Error::TooFewSamples { needed: 2, got: k });
    }
    let (ma, mb) = (mean(a), mean(b));
    if mb <= 0.0 {
        return Err(Error::DegenerateRatio("denominator".into()));
    }
    let cross: Vec<f64> = a.iter().zip(b).map(|(x, y)| (x - ma) * (y - mb)).collect();
    let cov = pairwise_sum(&cross) / (k - 1) as f64;
    let r = ma / mb;
    let var = (sample_variance(a) - 2.0 * r * cov + r * r * sample_variance(b)) / (mb * mb);
    let half = z * (var.max(0.0) / k as f64).sqrt();
    Ok(Interval {
        estimate: r,
        lo: r - half,
        hi: r + half,
    })
}

/// Complementary error function, rational approximation with absolute error
/// below 1.5e-7 (Abramowitz and Stegun 7.1.26).
fn erfc_nonneg(x: f64) -> f64 {
    const P: f64 = 0.327_591_1;
    const A: [f64; 5] = [0.254_829_592, -0.284_496_736, 1.421_413_741, -1.453_152_027, 1.061_405_429];
    let t = 1.0 / (1.0 + P * x);
    let poly = t * (A[0] + t * (A[1] + t * (A[2] + t * (A[3] + t * A[4]))));
    poly * (-x * x).exp()
}

/// Standard normal CDF.
pub fn normal_cdf(x: f64) -> f64 {
    if x.is_nan() {
        return f64::NAN;
    }
    let tail = 0.5 * erfc_nonneg(x.abs() / std::f64::consts::SQRT_2);
    if x < 0.0 {
        tail
    } else {
        1.0 - tail
    }
}

/// Central `level` acceptance region of Binomial(k, p): the 2.5% and 97.5%
/// quantiles for `level = 0.95`.
pub fn binomial_interval(k: usize, p: f64, level: f64) -> (usize, usize) {
    if p <= 0.0 {
        return (0, 0);
    }
    if p >= 1.0 {
        return (k, k);
    }
    let alpha = (1.0 - level) / 2.0;
    let (lp, lq) = (p.ln(), (-p).ln_1p());
    let mut log_pmf = k as f64 * lq;
    let mut cdf = 0.0;
    let mut lo = None;
    for i in 0..=k {
        if i > 0 {
            log_pmf += ((k - i + 1) as f64).ln() - (i as f64).ln() + lp - lq;
        }
        cdf += log_pmf.exp();
        if lo.is_none() && cdf >= alpha {
            lo = Some(i);
        }
        if cdf >= 1.0 - alpha {
            return (lo.unwrap_or(i), i);
        }
    }
    (lo.unwrap_or(k), k)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mse_examples() {
        assert_eq!(
            mse_with_ci(&[0.0, 0.0, 0.0], Z_95).unwrap(),
            Interval { estimate: 0.0, lo: 0.0, hi: 0.0 }
        );
        let c = mse_with_ci(&[1.5; 4], Z_95).unwrap();
        assert_eq!((c.estimate, c.lo, c.hi), (2.25, 2.25, 2.25));
        let two = mse_with_ci(&[0.0, 2.0], Z_95).unwrap();
        assert_eq!(two.estimate, 2.0);
        assert!((two.lo - -1.919928).abs() < 1e-12);
        assert!((two.hi - 5.919928).abs() < 1e-12);
        assert!(matches!(mse_with_ci(&[1.0], Z_95), Err(Error::TooFewSamples { .. })));
    }

    #[test]
    fn pairwise_sum_is_exact_on_small_integers() {
        let xs: Vec<f64> = (1..=1000).map(f64::from).collect();
        assert_eq!(pairwise_sum(&xs), 500_500.0);
        assert_eq!(pairwise_sum(&[]), 0.0);
    }

    #[test]
    fn ratio_of_identical_samples() {
        let a = [1.0, 2.0, 4.0, 0.5];
        let r = ratio_with_ci(&a, &a, Z_95).unwrap();
        assert_eq!(r.estimate, 1.0);
        assert!((r.hi - r.lo).abs() < 1e-12);
        assert!(ratio_with_ci(&a, &[0.0; 4], Z_95).is_err());
    }

    #[test]
    fn normal_cdf_landmarks() {
        assert!((normal_cdf(0.0) - 0.5).abs() < 1e-8);
        assert!((normal_cdf(Z_95) - 0.975).abs() < 1e-7);
        assert!((normal_cdf(-1.0) - 0.158_655_253_931_457_05).abs() < 1e-7);
        assert!(normal_cdf(-40.0) >= 0.0 && normal_cdf(-40.0) < 1e-300);
        assert_eq!(normal_cdf(40.0), 1.0);
    }

    #[test]
    fn binomial_interval_cases() {
        assert_eq!(binomial_interval(100, 0.0, 0.95), (0, 0));
        assert_eq!(binomial_interval(100, 1.0, 0.95), (100, 100));
        // Binomial(10, 1/2): P(X <= 1) = 11/1024 < 0.025 <= P(X <= 2) = 56/1024
        assert_eq!(binomial_interval(10, 0.5, 0.95), (2, 8));
        let (lo, hi) = binomial_interval(2000, 0.3, 0.95);
        assert!(lo < 600 && 600 < hi && hi - lo < 90);
    }
}
