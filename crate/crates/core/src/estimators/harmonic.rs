//! Boundary decay exponent of the harmonic measure of a target ball.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimators::{check_geometric, par_map};
use crate::geometry::DomainSpec;
use crate::point::Point2;
use crate::stats::{weighted_line_fit, Estimate, FitResult};
use crate::stochastic::{walk_on_spheres_with, Ball, RngKey, WalkOutcome};

/// Points origin + s·direction, s > 0, approaching the boundary point `origin`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AccessRay {
    pub origin: Point2,
    pub direction: Point2,
}

impl AccessRay {
    pub fn new(origin: Point2, direction: Point2) -> Self {
        let n = direction.norm();
        AccessRay {
            origin,
            direction: direction * (1.0 / n),
        }
    }

    pub fn at(&self, s: f64) -> Point2 {
        self.origin + self.direction * s
    }

    /// Point on the ray whose boundary distance equals `target`, by bisection
    /// on the first crossing.
    pub fn point_at_distance(&self, domain: &DomainSpec, target: f64) -> Result<Point2> {
        let d = |s: f64| domain.boundary_distance(self.at(s));
        let mut hi = target;
        let mut guard = 0;
        while d(hi) < target {
            hi *= 2.0;
            guard += 1;
            if guard > 60 {
                return Err(Error::arg(format!(
                    "the access ray never reaches distance {target} from the boundary"
                )));
            }
        }
        let mut lo = 0.0;
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if d(mid) < target {
                lo = mid;
            } else {
                hi = mid;
            }
            if hi - lo <= 1e-15 * hi {
                break;
            }
        }
        Ok(self.at(hi))
    }
}

/// Hit frequency of the target at one distance.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HarmonicPoint {
    pub distance: f64,
    pub point: Point2,
    pub h: Estimate,
    pub timeouts: usize,
}

/// Walk-on-spheres estimates of h(x) = P^x(reach the ball before K) along the ray.
#[allow(clippy::too_many_arguments)]
pub fn harmonic_profile(
    domain: &DomainSpec,
    ball: Ball,
    ray: &AccessRay,
    distances: &[f64],
    n_walks: usize,
    eps: f64,
    max_steps: usize,
    rng: &RngKey,
) -> Result<Vec<HarmonicPoint>> {
    if n_walks == 0 {
        return Err(Error::arg("n_walks must be at least 1"));
    }
    if !(eps > 0.0) || eps >= ball.radius {
        return Err(Error::arg("eps must satisfy 0 < eps < ball radius"));
    }
    let clearance = domain.boundary_distance(ball.center) - ball.radius;
    if distances.iter().any(|&d| d >= clearance) {
        return Err(Error::arg(format!(
            "every distance must stay below the ball clearance {clearance}"
        )));
    }
    if distances.iter().any(|&d| d <= eps) {
        return Err(Error::arg("every distance must exceed eps"));
    }
    let mut out = Vec::with_capacity(distances.len());
    for (k, &dist) in distances.iter().enumerate() {
        let x = ray.point_at_distance(domain, dist)?;
        if ball.gap(x) <= eps {
            return Err(Error::arg(format!("sample point {x:?} lies in the target ball")));
        }
        let key = rng.child("distance", k as u64);
        let outcomes = par_map(n_walks as u64, |i| {
            let mut r = key.child_rng("walk", i);
            walk_on_spheres_with(&mut r, domain, x, ball, eps, max_steps)
        });
        let hits: Vec<f64> = outcomes
            .iter()
            .map(|o| (*o == WalkOutcome::HitTarget) as u8 as f64)
            .collect();
        let timeouts = outcomes.iter().filter(|o| **o == WalkOutcome::Timeout).count();
        out.push(HarmonicPoint {
            distance: dist,
            point: x,
            h: Estimate::from_samples(&hits),
            timeouts,
        });
    }
    Ok(out)
}

/// Slope γ̂ of log ĥ against log d_K along the access ray.
#[allow(clippy::too_many_arguments)]
pub fn harmonic_exponent_fit(
    domain: &DomainSpec,
    ball: Ball,
    ray: &AccessRay,
    distances: &[f64],
    n_walks: usize,
    eps: f64,
    max_steps: usize,
    rng: &RngKey,
) -> Result<(FitResult, Vec<HarmonicPoint>)> {
    check_geometric(distances, 3, "distances")?;
    let profile = harmonic_profile(domain, ball, ray, distances, n_walks, eps, max_steps, rng)?;
    let total: usize = profile.iter().map(|p| p.h.n_samples).sum();
    let timeouts: usize = profile.iter().map(|p| p.timeouts).sum();
    if timeouts as f64 > 1e-3 * total as f64 {
        return Err(Error::UnreliableRun(format!(
            "{timeouts} of {total} walks hit the step cap"
        )));
    }
    let mut censored = Vec::new();
    let mut xy = Vec::new();
    for p in &profile {
        let h = p.h.value;
        if h > 0.0 && h < 1.0 {
            // Var(log ĥ) ≈ (1 − h) / (n h).
            let w = p.h.n_samples as f64 * h / (1.0 - h);
            xy.push((p.distance.ln(), h.ln(), w));
        } else {
            censored.push(p.distance);
        }
    }
    let mut fit = weighted_line_fit(&xy)?;
    fit.censored = censored;
    Ok((fit, profile))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{line_boundary, slit_boundary, Orientation};
    use crate::stochastic::{substream, DEFAULT_MAX_STEPS};

    fn half_plane() -> DomainSpec {
        DomainSpec::new(line_boundary(1.0).unwrap(), Orientation::InteriorIsHalfplaneUpper)
    }

    #[test]
    fn ray_bisection_hits_the_distance() {
        let dom = DomainSpec::new(slit_boundary(4.0).unwrap(), Orientation::Exterior);
        let ray = AccessRay::new(Point2::new(0.0, 0.0), Point2::new(1.0, 0.0));
        let p = ray.point_at_distance(&dom, 0.125).unwrap();
        assert!((p.x - 0.125).abs() < 1e-12 && p.y == 0.0);
        let ray = AccessRay::new(Point2::new(-1.0, 0.0), Point2::new(0.0, 3.0));
        let p = ray.point_at_distance(&dom, 0.3).unwrap();
        assert!((dom.boundary_distance(p) - 0.3).abs() < 1e-12);
    }

    #[test]
    fn half_plane_profile_is_monotone_and_linear() {
        let ball = Ball::new(Point2::new(0.0, 2.0), 0.5);
        let ray = AccessRay::new(Point2::ORIGIN, Point2::new(0.0, 1.0));
        let d = [0.4, 0.2, 0.1, 0.05];
        let (fit, prof) = harmonic_exponent_fit(&half_plane(), ball, &ray, &d, 20_000, 1e-5, DEFAULT_MAX_STEPS, &substream(1, &[])).unwrap();
        for w in prof.windows(2) {
            assert!(w[0].h.value >= w[1].h.value);
        }
        assert!((fit.slope - 1.0).abs() < 0.15, "{fit:?}");
    }

    #[test]
    fn rejects_points_beyond_clearance() {
        let ball = Ball::new(Point2::new(0.0, 2.0), 0.5);
        let ray = AccessRay::new(Point2::ORIGIN, Point2::new(0.0, 1.0));
        let r = harmonic_profile(&half_plane(), ball, &ray, &[1.6], 10, 1e-4, 100, &substream(1, &[]));
        assert!(r.is_err());
    }

    #[test]
    fn step_cap_makes_the_run_unreliable() {
        let ball = Ball::new(Point2::new(0.0, 2.0), 0.5);
        let ray = AccessRay::new(Point2::ORIGIN, Point2::new(0.0, 1.0));
        let r = harmonic_exponent_fit(&half_plane(), ball, &ray, &[0.4, 0.2, 0.1], 200, 1e-5, 1, &substream(1, &[]));
        assert!(matches!(r, Err(Error::UnreliableRun(_))));
    }
}
