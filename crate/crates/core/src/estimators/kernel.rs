//! Perturbed kernel p_t^V(x, y) through bridges, and the mass p_t^V carries
//! into a ball on the far side of K.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimators::{estimate_from_moments, par_moments, separated};
use crate::geometry::PrefractalBoundary;
use crate::point::Point2;
use crate::potential::{fk_functional, fk_weight, PotentialSpec};
use crate::stats::Estimate;
use crate::stochastic::{
    gaussian2, sample_bridge_with, transition_density, BandOccupation, BandSkeleton, Ball, RngKey,
};

/// One truncation level of an A-sweep.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub a: f64,
    pub estimate: Estimate,
    /// Mean |weight − weight at double step|, a discretization diagnostic.
    pub refinement: f64,
}

/// Truncated potentials sharing β and c_v at several levels A, read off a
/// single band occupation with one band edge per cutoff 1/A.
struct LevelSet {
    radii: Vec<f64>,
    /// For each requested A: its height and the index of its cutoff in `radii`.
    levels: Vec<(f64, usize)>,
}

impl LevelSet {
    fn new(base: &PotentialSpec, a_list: &[f64]) -> Result<Self> {
        if a_list.is_empty() {
            return Err(Error::arg("need at least one truncation level"));
        }
        let mut radii: Vec<f64> = Vec::new();
        for &a in a_list {
            base.with_truncation(a).validate()?;
            radii.push(1.0 / a);
        }
        radii.sort_by(f64::total_cmp);
        radii.dedup();
        let levels = a_list
            .iter()
            .map(|&a| {
                let idx = radii.partition_point(|&r| r < 1.0 / a);
                (base.with_truncation(a).level().unwrap(), idx)
            })
            .collect();
        Ok(LevelSet { radii, levels })
    }

    /// Weights at the fine step and at double step.
    fn weights(&self, occ: &BandOccupation, out: &mut [f64]) {
        let k = self.levels.len();
        for (slot, &(level, idx)) in self.levels.iter().enumerate() {
            let fine: f64 = occ.fine[..=idx].iter().sum();
            let coarse: f64 = occ.coarse[..=idx].iter().sum();
            let w = (-level * fine).exp();
            out[slot] = w;
            out[k + slot] = (w - (-level * coarse).exp()).abs();
        }
    }
}

/// p_t^V(x, y) = p_t(x, y) · E[exp(−A_V)] over Brownian bridges from x to y.
#[allow(clippy::too_many_arguments)]
pub fn kernel_bridge_estimate(
    x: Point2,
    y: Point2,
    t: f64,
    spec: &PotentialSpec,
    boundary: &PrefractalBoundary,
    n_paths: usize,
    n_steps: usize,
    rng: &RngKey,
) -> Result<Estimate> {
    if n_paths == 0 {
        return Err(Error::arg("n_paths must be at least 1"));
    }
    spec.check_resolution(t, n_steps)?;
    let p = transition_density(x, y, t)?;
    let n = n_paths as u64;
    let (s1, s2) = if spec.constant_override.is_some() {
        par_moments(n, 1, |i, out| {
            let mut r = rng.child_rng("path", i);
            let bridge = sample_bridge_with(&mut r, x, y, t, n_steps);
            out[0] = fk_weight(&fk_functional(&bridge, spec, boundary).expect("checked above"));
        })
    } else {
        let sk = BandSkeleton::new(boundary, &[spec.cutoff().unwrap()], t, n_steps);
        let level = spec.level().unwrap();
        par_moments(n, 1, |i, out| {
            let mut r = rng.child_rng("path", i);
            let occ = sk.bridge(&mut r, x, y);
            out[0] = (-level * occ.fine[0]).exp();
        })
    };
    Ok(estimate_from_moments(s1[0], s2[0], n).scaled(p))
}

fn check_crossing(x: Point2, ball: &Ball, boundary: &PrefractalBoundary) -> Result<()> {
    if !(ball.radius > 0.0) {
        return Err(Error::arg("ball radius must be positive"));
    }
    if boundary.distance(ball.center) <= ball.radius {
        return Err(Error::arg("the target ball meets the boundary"));
    }
    if !separated(boundary, x, ball.center)? {
        return Err(Error::arg(
            "the target ball lies in the same component as the starting point",
        ));
    }
    Ok(())
}

/// E^x[exp(−A_V(t)) 1_{B₀}(X_t)] for one potential.
#[allow(clippy::too_many_arguments)]
pub fn crossing_mass_estimate(
    x: Point2,
    ball: Ball,
    t: f64,
    spec: &PotentialSpec,
    boundary: &PrefractalBoundary,
    n_paths: usize,
    n_steps: usize,
    rng: &RngKey,
) -> Result<Estimate> {
    spec.validate()?;
    if let Some(c) = spec.constant_override {
        check_crossing(x, &ball, boundary)?;
        let n = n_paths.max(1) as u64;
        let w = (-c * t).exp();
        let (s1, s2) = par_moments(n, 1, |i, out| {
            let mut r = rng.child_rng("path", i);
            let end = x + gaussian2(&mut r) * (2.0 * t).sqrt();
            out[0] = if ball.contains(end) { w } else { 0.0 };
        });
        return Ok(estimate_from_moments(s1[0], s2[0], n));
    }
    let a = spec.truncation_a.ok_or(Error::UnsupportedSingularity)?;
    let pts = crossing_mass_sweep(x, ball, t, spec, &[a], boundary, n_paths, n_steps, rng)?;
    Ok(pts[0].estimate)
}

/// Crossing masses for every A in `a_list` from one set of paths.
///
/// The endpoint X_t is drawn first; only paths ending in B₀ need their
/// functional, which is then integrated along a bridge to that endpoint.
/// This has the law of the forward path, and the same random numbers serve
/// every A and every c_v.
#[allow(clippy::too_many_arguments)]
pub fn crossing_mass_sweep(
    x: Point2,
    ball: Ball,
    t: f64,
    base: &PotentialSpec,
    a_list: &[f64],
    boundary: &PrefractalBoundary,
    n_paths: usize,
    n_steps: usize,
    rng: &RngKey,
) -> Result<Vec<SweepPoint>> {
    if n_paths == 0 {
        return Err(Error::arg("n_paths must be at least 1"));
    }
    if !(t > 0.0 && t.is_finite()) {
        return Err(Error::arg(format!("t must be positive, got {t}")));
    }
    check_crossing(x, &ball, boundary)?;
    let set = LevelSet::new(base, a_list)?;
    let a_max = a_list.iter().copied().fold(0.0, f64::max);
    base.with_truncation(a_max).check_resolution(t, n_steps)?;
    let sk = BandSkeleton::new(boundary, &set.radii, t, n_steps).with_edge_scaled_steps();
    let k = a_list.len();
    let n = n_paths as u64;
    let (s1, s2) = par_moments(n, 2 * k, |i, out| {
        let mut r = rng.child_rng("path", i);
        let end = x + gaussian2(&mut r) * (2.0 * t).sqrt();
        if ball.contains(end) {
            let occ = sk.bridge(&mut r, x, end);
            set.weights(&occ, out);
        }
    });
    Ok(a_list
        .iter()
        .enumerate()
        .map(|(j, &a)| SweepPoint {
            a,
            estimate: estimate_from_moments(s1[j], s2[j], n),
            refinement: s1[k + j] / n as f64,
        })
        .collect())
}
