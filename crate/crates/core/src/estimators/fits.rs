//! Power-law fits in the truncation level A.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimators::{check_geometric, par_map};
use crate::geometry::PrefractalBoundary;
use crate::point::Point2;
use crate::potential::PotentialSpec;
use crate::stats::{median, weighted_line_fit, Estimate, FitResult};
use crate::stochastic::{BandSkeleton, RngKey};

/// Functional statistics at one truncation level.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DivergencePoint {
    pub a: f64,
    pub median: f64,
    pub mean: Estimate,
    /// Mean |A_V − A_V at double step|.
    pub refinement: f64,
}

/// Median and mean of the truncated functional over forward paths of
/// duration δ² from x0, for every A in `a_list` (c_v = 1).
pub fn divergence_sweep(
    boundary: &PrefractalBoundary,
    x0: Point2,
    delta: f64,
    beta: f64,
    a_list: &[f64],
    n_paths: usize,
    rng: &RngKey,
) -> Result<Vec<DivergencePoint>> {
    if n_paths == 0 {
        return Err(Error::arg("n_paths must be at least 1"));
    }
    if !(delta > 0.0 && delta.is_finite()) {
        return Err(Error::arg(format!("delta must be positive, got {delta}")));
    }
    let tol = boundary.resolution().max(1e-9);
    if boundary.distance(x0) > tol {
        return Err(Error::arg("x0 must lie on the boundary"));
    }
    let horizon = delta * delta;
    let a_max = a_list.iter().copied().fold(0.0, f64::max);
    let top = PotentialSpec::truncated(beta, a_max);
    let n_steps = top.required_steps(horizon);
    top.check_resolution(horizon, n_steps)?;
    let mut radii: Vec<f64> = a_list.iter().map(|a| 1.0 / a).collect();
    radii.sort_by(f64::total_cmp);
    let sk = BandSkeleton::new(boundary, &radii, horizon, n_steps).with_edge_scaled_steps();
    let occs = par_map(n_paths as u64, |i| {
        let mut r = rng.child_rng("path", i);
        sk.forward(&mut r, x0)
    });
    a_list
        .iter()
        .map(|&a| {
            let spec = PotentialSpec::truncated(beta, a);
            spec.validate()?;
            let level = spec.level().unwrap();
            let idx = radii.partition_point(|&r| r < 1.0 / a);
            let vals: Vec<f64> = occs
                .iter()
                .map(|o| level * o.fine[..=idx].iter().sum::<f64>())
                .collect();
            let deltas: Vec<f64> = occs
                .iter()
                .zip(&vals)
                .map(|(o, v)| (v - level * o.coarse[..=idx].iter().sum::<f64>()).abs())
                .collect();
            Ok(DivergencePoint {
                a,
                median: median(&vals),
                mean: Estimate::from_samples(&vals),
                refinement: Estimate::from_samples(&deltas).value,
            })
        })
        .collect()
}

/// Slope of log(median functional) against log A; expected β + α − d when positive.
pub fn divergence_growth_fit(
    boundary: &PrefractalBoundary,
    x0: Point2,
    delta: f64,
    beta: f64,
    a_list: &[f64],
    n_paths: usize,
    rng: &RngKey,
) -> Result<FitResult> {
    check_geometric(a_list, 4, "a_list")?;
    let pts = divergence_sweep(boundary, x0, delta, beta, a_list, n_paths, rng)?;
    fit_medians(&pts)
}

pub(crate) fn fit_medians(pts: &[DivergencePoint]) -> Result<FitResult> {
    let mut censored = Vec::new();
    let mut xy = Vec::new();
    for p in pts {
        if p.median > 0.0 {
            xy.push((p.a.ln(), p.median.ln(), 1.0));
        } else {
            censored.push(p.a);
        }
    }
    let mut fit = weighted_line_fit(&xy)?;
    fit.censored = censored;
    Ok(fit)
}

/// Weighted fit of log mass against log A; σ̂ is minus the slope.
///
/// Weights are (value / stderr)², the inverse variance of log value. Points
/// with a non-positive value cannot enter a log fit and are listed in
/// `censored` instead of being clamped.
pub fn decay_rate_fit(masses: &[(f64, Estimate)]) -> Result<FitResult> {
    let a_list: Vec<f64> = masses.iter().map(|m| m.0).collect();
    check_geometric(&a_list, 4, "A values")?;
    let mut censored = Vec::new();
    let mut kept = Vec::new();
    for &(a, e) in masses {
        if e.value > 0.0 && e.value.is_finite() {
            kept.push((a, e));
        } else {
            censored.push(a);
        }
    }
    let rel: Vec<f64> = kept.iter().map(|(_, e)| e.stderr / e.value).collect();
    let floor = rel.iter().copied().filter(|r| *r > 0.0).fold(f64::INFINITY, f64::min);
    let xy: Vec<(f64, f64, f64)> = kept
        .iter()
        .zip(&rel)
        .map(|(&(a, e), &r)| {
            // Exact (zero-variance) masses get the weight of the best measured point.
            let r = if r > 0.0 { r } else if floor.is_finite() { floor } else { 1.0 };
            (a.ln(), e.value.ln(), 1.0 / (r * r))
        })
        .collect();
    let mut fit = weighted_line_fit(&xy).map_err(|e| match e {
        Error::Argument(m) => Error::arg(format!("{m} ({} censored)", censored.len())),
        other => other,
    })?;
    fit.censored = censored;
    Ok(fit)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::line_boundary;
    use crate::stochastic::substream;

    #[test]
    fn flat_masses_give_zero_rate() {
        let masses: Vec<(f64, Estimate)> = [4.0, 8.0, 16.0, 32.0, 64.0]
            .iter()
            .map(|&a| (a, Estimate::new(0.3, 0.001, 1000)))
            .collect();
        let fit = decay_rate_fit(&masses).unwrap();
        assert!(fit.slope.abs() < 1e-12);
        assert!(fit.ci_contains(0.0));
    }

    #[test]
    fn power_law_masses() {
        let masses: Vec<(f64, Estimate)> = [4.0, 8.0, 16.0, 32.0]
            .iter()
            .map(|&a: &f64| (a, Estimate::new(a.powf(-0.7), 1e-3 * a.powf(-0.7), 1000)))
            .collect();
        let fit = decay_rate_fit(&masses).unwrap();
        assert!((fit.slope + 0.7).abs() < 1e-12);
    }

    #[test]
    fn non_positive_masses_are_censored() {
        let masses = vec![
            (4.0, Estimate::new(0.5, 0.01, 100)),
            (8.0, Estimate::new(0.25, 0.01, 100)),
            (16.0, Estimate::new(0.125, 0.01, 100)),
            (32.0, Estimate::new(0.0625, 0.01, 100)),
            (64.0, Estimate::new(0.0, 0.0, 100)),
        ];
        let fit = decay_rate_fit(&masses).unwrap();
        assert_eq!(fit.censored, vec![64.0]);
        assert!((fit.slope + 1.0).abs() < 1e-9);
    }

    #[test]
    fn needs_four_geometric_levels() {
        let e = Estimate::new(1.0, 0.1, 10);
        assert!(decay_rate_fit(&[(4.0, e), (8.0, e)]).is_err());
        assert!(decay_rate_fit(&[(4.0, e), (8.0, e), (16.0, e), (20.0, e)]).is_err());
    }

    #[test]
    fn supercritical_line_growth() {
        let line = line_boundary(20.0).unwrap();
        let fit = divergence_growth_fit(&line, Point2::ORIGIN, 0.5, 1.5, &[4.0, 8.0, 16.0, 32.0], 400, &substream(3, &[])).unwrap();
        assert!((fit.slope - 0.5).abs() < 0.2, "{fit:?}");
    }
}
