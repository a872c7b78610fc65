//! Small statistics helpers: bootstrap comparison of means and OLS slope
//! confidence intervals.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, StudentsT};

pub fn mean(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        return f64::NAN;
    }
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Population variance.
pub fn variance(xs: &[f64]) -> f64 {
    let m = mean(xs);
    xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / xs.len() as f64
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BootstrapComparison {
    pub mean_a: f64,
    pub mean_b: f64,
    pub ratio: f64,
    /// Share of resamples with `mean(a) <= mean(b)`.
    pub p_greater: f64,
    /// Share of resamples with `mean(a) < threshold * mean(b)`.
    pub p_ratio: f64,
    pub resamples: usize,
}

/// One-sided bootstrap test that `a` has the larger mean, resampling each
/// group independently with replacement.
pub fn bootstrap_compare(a: &[f64], b: &[f64], threshold: f64, resamples: usize, seed: u64) -> BootstrapComparison {
    assert!(!a.is_empty() && !b.is_empty(), "bootstrap needs samples in both groups");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut resample = |xs: &[f64]| (0..xs.len()).map(|_| xs[rng.random_range(0..xs.len())]).sum::<f64>() / xs.len() as f64;
    let (mut not_greater, mut below) = (0usize, 0usize);
    for _ in 0..resamples {
        let (ma, mb) = (resample(a), resample(b));
        if ma <= mb {
            not_greater += 1;
        }
        if ma < threshold * mb {
            below += 1;
        }
    }
    let (mean_a, mean_b) = (mean(a), mean(b));
    BootstrapComparison {
        mean_a,
        mean_b,
        ratio: mean_a / mean_b,
        p_greater: not_greater as f64 / resamples as f64,
        p_ratio: below as f64 / resamples as f64,
        resamples,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SlopeFit {
    pub slope: f64,
    pub intercept: f64,
    pub std_err: f64,
    pub ci_low: f64,
    pub ci_high: f64,
}

impl SlopeFit {
    pub fn ci_contains(&self, x: f64) -> bool {
        self.ci_low <= x && x <= self.ci_high
    }
}

/// Least-squares line through `(i, ys[i])` with a two-sided Student-t
/// interval on the slope.
pub fn ols_slope(ys: &[f64], level: f64) -> SlopeFit {
    let n = ys.len();
    assert!(n >= 3, "slope interval needs at least 3 points");
    let xs: Vec<f64> = (0..n).map(|i| i as f64).collect();
    let (mx, my) = (mean(&xs), mean(ys));
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let sse: f64 = xs.iter().zip(ys).map(|(x, y)| (y - intercept - slope * x).powi(2)).sum();
    let std_err = (sse / (n - 2) as f64 / sxx).sqrt();
    let t = StudentsT::new(0.0, 1.0, (n - 2) as f64).expect("valid dof").inverse_cdf(0.5 + level / 2.0);
    SlopeFit { slope, intercept, std_err, ci_low: slope - t * std_err, ci_high: slope + t * std_err }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_line() {
        let ys: Vec<f64> = (0..10).map(|i| 2.0 * i as f64 + 1.0).collect();
        let fit = ols_slope(&ys, 0.95);
        assert!((fit.slope - 2.0).abs() < 1e-12);
        assert!((fit.intercept - 1.0).abs() < 1e-12);
        assert!(fit.std_err < 1e-9);
    }

    #[test]
    fn slope_interval_matches_reference() {
        // y = [1, 3, 2, 5, 4]: slope 0.8, se = sqrt((3.6/3)/10), t(0.975, 3) = 3.182446.
        let fit = ols_slope(&[1.0, 3.0, 2.0, 5.0, 4.0], 0.95);
        assert!((fit.slope - 0.8).abs() < 1e-12);
        let se = (1.2f64 / 10.0).sqrt();
        assert!((fit.std_err - se).abs() < 1e-12);
        assert!((fit.ci_high - (0.8 + 3.182446305 * se)).abs() < 1e-6);
    }

    #[test]
    fn bootstrap_separates_shifted_groups() {
        let a = [5.0, 6.0, 5.5, 6.5, 5.2];
        let b = [1.0, 1.5, 2.0, 1.2, 1.8];
        let c = bootstrap_compare(&a, &b, 1.5, 2000, 1);
        assert_eq!(c.p_greater, 0.0);
        assert_eq!(c.p_ratio, 0.0);
        let same = bootstrap_compare(&b, &b, 1.0, 2000, 1);
        assert!(same.p_greater > 0.3);
    }
}
