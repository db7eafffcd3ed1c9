//! Walk-on-spheres for the harmonic measure of a target ball.

use std::f64::consts::TAU;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::DomainSpec;
use crate::point::Point2;
use crate::stochastic::rng::RngKey;

/// Default step cap per walk.
pub const DEFAULT_MAX_STEPS: usize = 100_000;

/// Default absorption width relative to the boundary diameter.
pub const DEFAULT_EPS_FRACTION: f64 = 1e-4;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Ball {
    pub center: Point2,
    pub radius: f64,
}

impl Ball {
    pub fn new(center: Point2, radius: f64) -> Self {
        Ball { center, radius }
    }

    #[inline]
    pub fn contains(&self, p: Point2) -> bool {
        p.dist(self.center) <= self.radius
    }

    /// Signed distance to the sphere (negative inside).
    #[inline]
    pub fn gap(&self, p: Point2) -> f64 {
        p.dist(self.center) - self.radius
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WalkOutcome {
    HitBoundary,
    HitTarget,
    Timeout,
}

/// One walk from `start`; see [`walk_on_spheres_with`].
pub fn walk_on_spheres(
    rng: &RngKey,
    domain: &DomainSpec,
    start: Point2,
    target: Ball,
    eps: f64,
    max_steps: usize,
) -> Result<WalkOutcome> {
    if !(eps > 0.0) || eps >= target.radius {
        return Err(Error::arg(format!(
            "eps must satisfy 0 < eps < target radius, got {eps}"
        )));
    }
    if target.gap(start) <= 0.0 || domain.boundary_distance(start) <= eps {
        return Err(Error::arg(
            "start must lie strictly between the boundary and the target ball",
        ));
    }
    let mut r = rng.rng();
    Ok(walk_on_spheres_with(&mut r, domain, start, target, eps, max_steps))
}

/// Jump to a uniform point on the largest circle around the current point that
/// meets neither the boundary nor the target; absorb within `eps` of either.
pub fn walk_on_spheres_with<R: Rng + ?Sized>(
    rng: &mut R,
    domain: &DomainSpec,
    start: Point2,
    target: Ball,
    eps: f64,
    max_steps: usize,
) -> WalkOutcome {
    let mut x = start;
    for _ in 0..max_steps {
        let to_target = target.gap(x);
        if to_target <= eps {
            return WalkOutcome::HitTarget;
        }
        let to_boundary = domain.boundary_distance_capped(x, to_target);
        if to_boundary <= eps {
            return WalkOutcome::HitBoundary;
        }
        let radius = to_boundary.min(to_target);
        let angle = rng.random::<f64>() * TAU;
        let (s, c) = angle.sin_cos();
        x = x + Point2::new(c, s) * radius;
    }
    WalkOutcome::Timeout
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{koch_prefractal, line_boundary, snowflake_centroid, Orientation};
    use crate::stochastic::rng::substream;

    #[test]
    fn unreachable_target_always_hits_boundary() {
        let dom = DomainSpec::new(koch_prefractal(2).unwrap(), Orientation::InteriorIsBounded);
        let target = Ball::new(Point2::new(5.0, 5.0), 0.5);
        for i in 0..300 {
            let out = walk_on_spheres(
                &substream(1, &[("w", i)]),
                &dom,
                snowflake_centroid(),
                target,
                1e-4,
                DEFAULT_MAX_STEPS,
            )
            .unwrap();
            assert_eq!(out, WalkOutcome::HitBoundary);
        }
    }

    #[test]
    fn symmetric_slab_is_fair() {
        // Absorbing wall y = 0, target wall y = 2 (a huge ball), start at y = 1.
        let dom = DomainSpec::new(line_boundary(1.0).unwrap(), Orientation::InteriorIsHalfplaneUpper);
        let big = 1e6;
        let target = Ball::new(Point2::new(0.0, 2.0 + big), big);
        let n = 20_000;
        let mut hits = 0usize;
        let key = substream(2, &[("slab", 0)]);
        for i in 0..n {
            let mut r = key.child_rng("walk", i);
            let out = walk_on_spheres_with(&mut r, &dom, Point2::new(0.0, 1.0), target, 1e-5, DEFAULT_MAX_STEPS);
            assert_ne!(out, WalkOutcome::Timeout);
            hits += (out == WalkOutcome::HitTarget) as usize;
        }
        let p = hits as f64 / n as f64;
        let se = (0.25 / n as f64).sqrt();
        assert!((p - 0.5).abs() < 3.0 * se, "{p}");
    }

    #[test]
    fn argument_checks() {
        let dom = DomainSpec::new(line_boundary(1.0).unwrap(), Orientation::InteriorIsHalfplaneUpper);
        let target = Ball::new(Point2::new(0.0, 2.0), 0.5);
        let k = substream(0, &[]);
        assert!(walk_on_spheres(&k, &dom, Point2::new(0.0, 1.0), target, 0.6, 10).is_err());
        assert!(walk_on_spheres(&k, &dom, Point2::new(0.0, 2.0), target, 1e-3, 10).is_err());
        assert!(walk_on_spheres(&k, &dom, Point2::new(0.0, 0.0), target, 1e-3, 10).is_err());
    }

    #[test]
    fn zero_budget_times_out() {
        let dom = DomainSpec::new(line_boundary(1.0).unwrap(), Orientation::InteriorIsHalfplaneUpper);
        let target = Ball::new(Point2::new(0.0, 2.0), 0.5);
        let out = walk_on_spheres(&substream(0, &[]), &dom, Point2::new(0.0, 1.0), target, 1e-3, 0).unwrap();
        assert_eq!(out, WalkOutcome::Timeout);
    }
}
