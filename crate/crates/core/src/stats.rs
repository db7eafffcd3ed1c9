//! Monte Carlo summaries and weighted least-squares line fits.

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::error::{Error, Result};

/// Two-sided 95% normal quantile.
pub const Z95: f64 = 1.959963984540054;

/// Monte Carlo value with its sampling uncertainty.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub value: f64,
    pub stderr: f64,
    pub n_samples: usize,
    pub ci95: (f64, f64),
}

impl Estimate {
    pub fn new(value: f64, stderr: f64, n_samples: usize) -> Self {
        Estimate {
            value,
            stderr,
            n_samples,
            ci95: (value - Z95 * stderr, value + Z95 * stderr),
        }
    }

    /// Sample mean and `std / sqrt(n)` with the unbiased sample variance.
    pub fn from_samples(samples: &[f64]) -> Self {
        let n = samples.len();
        if n == 0 {
            return Estimate::new(f64::NAN, f64::NAN, 0);
        }
        let mean = pairwise_sum(samples) / n as f64;
        let var = if n > 1 {
            let dev: Vec<f64> = samples.iter().map(|x| (x - mean) * (x - mean)).collect();
            pairwise_sum(&dev) / (n - 1) as f64
        } else {
            0.0
        };
        Estimate::new(mean, (var / n as f64).sqrt(), n)
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Estimate::new(self.value * factor, self.stderr * factor.abs(), self.n_samples)
    }

    pub fn ci_excludes_zero(&self) -> bool {
        self.ci95.0 > 0.0 || self.ci95.1 < 0.0
    }
}

/// Fixed-shape pairwise summation: the result depends only on the input order,
/// never on how work was scheduled.
pub fn pairwise_sum(xs: &[f64]) -> f64 {
    const BLOCK: usize = 64;
    if xs.len() <= BLOCK {
        return xs.iter().sum();
    }
    let mid = xs.len() / 2;
    pairwise_sum(&xs[..mid]) + pairwise_sum(&xs[mid..])
}

pub fn median(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        return f64::NAN;
    }
    let mut v = xs.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub slope: f64,
    pub intercept: f64,
    pub slope_stderr: f64,
    pub slope_ci95: (f64, f64),
    pub r_squared: f64,
    /// Points used in the fit as `(x, y, weight)`.
    pub points: Vec<(f64, f64, f64)>,
    /// Abscissae dropped before fitting (censored observations).
    pub censored: Vec<f64>,
}

impl FitResult {
    pub fn ci_contains(&self, v: f64) -> bool {
        self.slope_ci95.0 <= v && v <= self.slope_ci95.1
    }

    pub fn residuals(&self) -> Vec<f64> {
        self.points
            .iter()
            .map(|&(x, y, _)| y - (self.intercept + self.slope * x))
            .collect()
    }
}

/// Weighted least-squares line `y = intercept + slope * x`.
///
/// The slope interval uses the residual-scaled variance with a Student t
/// quantile on `n - 2` degrees of freedom.
pub fn weighted_line_fit(points: &[(f64, f64, f64)]) -> Result<FitResult> {
    if points.len() < 3 {
        return Err(Error::arg(format!(
            "line fit needs at least 3 points, got {}",
            points.len()
        )));
    }
    if points
        .iter()
        .any(|&(x, y, w)| !(x.is_finite() && y.is_finite() && w.is_finite() && w > 0.0))
    {
        return Err(Error::arg("fit points must be finite with positive weights"));
    }
    let sw: f64 = points.iter().map(|p| p.2).sum();
    let xm = points.iter().map(|p| p.2 * p.0).sum::<f64>() / sw;
    let ym = points.iter().map(|p| p.2 * p.1).sum::<f64>() / sw;
    let sxx: f64 = points.iter().map(|p| p.2 * (p.0 - xm).powi(2)).sum();
    if sxx <= 0.0 {
        return Err(Error::arg("fit abscissae are all equal"));
    }
    let sxy: f64 = points.iter().map(|p| p.2 * (p.0 - xm) * (p.1 - ym)).sum();
    let syy: f64 = points.iter().map(|p| p.2 * (p.1 - ym).powi(2)).sum();
    let slope = sxy / sxx;
    let intercept = ym - slope * xm;
    let ssr: f64 = points
        .iter()
        .map(|p| p.2 * (p.1 - intercept - slope * p.0).powi(2))
        .sum();
    let r_squared = if syy > 0.0 { 1.0 - ssr / syy } else { 1.0 };
    let dof = (points.len() - 2) as f64;
    let slope_stderr = (ssr / dof / sxx).sqrt();
    let t = StudentsT::new(0.0, 1.0, dof)
        .map(|d| d.inverse_cdf(0.975))
        .unwrap_or(Z95);
    Ok(FitResult {
        slope,
        intercept,
        slope_stderr,
        slope_ci95: (slope - t * slope_stderr, slope + t * slope_stderr),
        r_squared,
        points: points.to_vec(),
        censored: Vec::new(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn estimate_ci_is_symmetric() {
        let e = Estimate::from_samples(&[1.0, 2.0, 3.0, 4.0]);
        assert_eq!(e.value, 2.5);
        let sd = (5.0f64 / 3.0).sqrt();
        assert!((e.stderr - sd / 2.0).abs() < 1e-15);
        assert!((e.ci95.1 - e.value - Z95 * e.stderr).abs() < 1e-15);
        assert!((e.value - e.ci95.0 - Z95 * e.stderr).abs() < 1e-15);
    }

    #[test]
    fn exact_line_has_zero_width_interval() {
        let pts: Vec<_> = (0..5).map(|i| (i as f64, 2.0 * i as f64 + 1.0, 1.0)).collect();
        let f = weighted_line_fit(&pts).unwrap();
        assert!((f.slope - 2.0).abs() < 1e-12);
        assert!((f.intercept - 1.0).abs() < 1e-12);
        assert!(f.slope_stderr < 1e-12);
        assert!((f.r_squared - 1.0).abs() < 1e-12);
    }

    #[test]
    fn too_few_points() {
        assert!(weighted_line_fit(&[(0.0, 0.0, 1.0), (1.0, 1.0, 1.0)]).is_err());
    }

    #[test]
    fn median_even_and_odd() {
        assert_eq!(median(&[3.0, 1.0, 2.0]), 2.0);
        assert_eq!(median(&[4.0, 1.0, 2.0, 3.0]), 2.5);
    }

    proptest! {
        #[test]
        fn r_squared_matches_residuals(
            ys in proptest::collection::vec(-5.0f64..5.0, 4..12),
            ws in proptest::collection::vec(0.1f64..10.0, 12),
        ) {
            let pts: Vec<_> = ys.iter().enumerate().map(|(i, &y)| (i as f64 * 0.7, y, ws[i])).collect();
            let f = weighted_line_fit(&pts).unwrap();
            let sw: f64 = pts.iter().map(|p| p.2).sum();
            let ym = pts.iter().map(|p| p.2 * p.1).sum::<f64>() / sw;
            let res = f.residuals();
            let ssr: f64 = res.iter().zip(&pts).map(|(r, p)| p.2 * r * r).sum();
            let syy: f64 = pts.iter().map(|p| p.2 * (p.1 - ym).powi(2)).sum();
            prop_assume!(syy > 1e-9);
            prop_assert!((f.r_squared - (1.0 - ssr / syy)).abs() < 1e-12);
            // Weighted residuals are orthogonal to the regressors.
            let rx: f64 = res.iter().zip(&pts).map(|(r, p)| p.2 * r * p.0).sum();
            let r1: f64 = res.iter().zip(&pts).map(|(r, p)| p.2 * r).sum();
            prop_assert!(rx.abs() < 1e-9 && r1.abs() < 1e-9);
        }

        #[test]
        fn pairwise_sum_close_to_naive(xs in proptest::collection::vec(-1e3f64..1e3, 0..500)) {
            let naive: f64 = xs.iter().sum();
            prop_assert!((pairwise_sum(&xs) - naive).abs() < 1e-9);
        }
    }
}
