//! Occupation times Z_n of the shells K'_n = {a^{n+1} < d_K <= a^n} and the
//! Paley-Zygmund lower bound on P(Z_n >= θ E Z_n).

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimators::par_map;
use crate::geometry::{PrefractalBoundary, AMBIENT_DIM};
use crate::point::Point2;
use crate::potential::bands::BandQuadrature;
use crate::potential::exp_integral_e1;
use crate::stats::pairwise_sum;
use crate::stochastic::{BandSkeleton, RngKey};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OccupationStats {
    pub a: f64,
    pub delta: f64,
    pub n_range: (u32, u32),
    /// `samples[k]` holds Z_n for n = n_range.0 + k.
    pub samples: Vec<Vec<f64>>,
    /// a^{n(d−α)} δ^{2−d+α}.
    pub b_n: Vec<f64>,
    pub mean_hat: Vec<f64>,
    pub second_moment_hat: Vec<f64>,
    /// Mean of Z_n summed at twice the skeleton step.
    pub coarse_mean_hat: Vec<f64>,
    pub step: f64,
}

impl OccupationStats {
    pub fn ns(&self) -> impl Iterator<Item = u32> + '_ {
        self.n_range.0..=self.n_range.1
    }

    pub fn n_samples(&self) -> usize {
        self.samples.first().map_or(0, Vec::len)
    }
}

fn check_start(boundary: &PrefractalBoundary, x0: Point2) -> Result<()> {
    let tol = boundary.resolution().max(1e-9);
    let d = boundary.distance(x0);
    if d > tol {
        return Err(Error::arg(format!(
            "x0 must lie within {tol:e} of the boundary, found distance {d:e}"
        )));
    }
    Ok(())
}

fn check_shells(a: f64, delta: f64, n_range: (u32, u32)) -> Result<()> {
    if !(a > 0.0 && a < 1.0) {
        return Err(Error::arg(format!("a must lie in (0, 1), got {a}")));
    }
    if !(delta > 0.0 && delta.is_finite()) {
        return Err(Error::arg(format!("delta must be positive, got {delta}")));
    }
    if n_range.0 > n_range.1 {
        return Err(Error::arg("empty shell range"));
    }
    Ok(())
}

/// Shell occupations of one set of forward paths of duration δ² from x0.
#[allow(clippy::too_many_arguments)]
pub fn occupation_samples(
    boundary: &PrefractalBoundary,
    x0: Point2,
    delta: f64,
    a: f64,
    n_range: (u32, u32),
    n_paths: usize,
    n_steps: usize,
    rng: &RngKey,
) -> Result<OccupationStats> {
    check_shells(a, delta, n_range)?;
    check_start(boundary, x0)?;
    if n_paths == 0 {
        return Err(Error::arg("n_paths must be at least 1"));
    }
    let (n_min, n_max) = n_range;
    let horizon = delta * delta;
    let thinnest = a.powi(n_max as i32 + 1);
    let max_step = thinnest * thinnest / 20.0;
    let step = horizon / n_steps.max(1) as f64;
    if step > max_step * (1.0 + 1e-12) {
        return Err(Error::Resolution {
            what: format!("shell {n_max} (inner radius {thinnest:e})"),
            step,
            max_step,
            required_n_steps: (horizon / max_step * (1.0 - 1e-12)).ceil() as usize,
        });
    }
    // radii[j] = a^{n_max+1-j}; shell n is band n_max + 1 − n.
    let radii: Vec<f64> = (n_min..=n_max + 1).rev().map(|n| a.powi(n as i32)).collect();
    let sk = BandSkeleton::new(boundary, &radii, horizon, n_steps).with_edge_scaled_steps();
    let occs = par_map(n_paths as u64, |i| {
        let mut r = rng.child_rng("path", i);
        sk.forward(&mut r, x0)
    });
    let alpha = boundary.nominal_alpha();
    let mut stats = OccupationStats {
        a,
        delta,
        n_range,
        samples: Vec::new(),
        b_n: Vec::new(),
        mean_hat: Vec::new(),
        second_moment_hat: Vec::new(),
        coarse_mean_hat: Vec::new(),
        step: sk.fine_step(),
    };
    let m = n_paths as f64;
    for n in n_min..=n_max {
        let band = (n_max + 1 - n) as usize;
        let z: Vec<f64> = occs.iter().map(|o| o.fine[band]).collect();
        let zc: Vec<f64> = occs.iter().map(|o| o.coarse[band]).collect();
        let z2: Vec<f64> = z.iter().map(|v| v * v).collect();
        stats.mean_hat.push(pairwise_sum(&z) / m);
        stats.second_moment_hat.push(pairwise_sum(&z2) / m);
        stats.coarse_mean_hat.push(pairwise_sum(&zc) / m);
        stats
            .b_n
            .push(a.powf(n as f64 * (AMBIENT_DIM - alpha)) * delta.powf(2.0 - AMBIENT_DIM + alpha));
        stats.samples.push(z);
    }
    Ok(stats)
}

/// E Z_n = ∫_{K'_n} Γ_{δ²}(|x0 − y|) dy by deterministic quadrature.
///
/// `mesh` caps the cell size where the shell edges cut the quadrature grid.
pub fn occupation_mean_oracle(
    boundary: &PrefractalBoundary,
    x0: Point2,
    delta: f64,
    a: f64,
    n: u32,
    mesh: f64,
) -> Result<f64> {
    check_shells(a, delta, (n, n))?;
    check_start(boundary, x0)?;
    let outer = a.powi(n as i32);
    let inner = outer * a;
    if !(mesh > 0.0) || mesh > outer - inner {
        return Err(Error::arg(format!(
            "mesh {mesh:e} must be positive and no coarser than the shell width {:e}",
            outer - inner
        )));
    }
    let t = delta * delta;
    let reach = (120.0 * t).sqrt();
    let mut q = BandQuadrature::new(boundary, &[inner, outer], x0, reach);
    q.singular = Some(x0);
    q.mesh = Some(mesh);
    q.max_side = 0.25 * delta;
    let bands = q.integrate(|z, _| {
        let r2 = z.dist(x0).powi(2);
        if r2 == 0.0 {
            0.0
        } else {
            exp_integral_e1(r2 / (4.0 * t)) / (4.0 * std::f64::consts::PI)
        }
    });
    Ok(bands[1])
}

/// (1 − θ)² (E Z)² / E Z².
pub fn paley_zygmund_bound(mean: f64, second_moment: f64, theta: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&theta) {
        return Err(Error::arg(format!("theta must lie in [0, 1], got {theta}")));
    }
    if !(mean > 0.0) || !(second_moment > 0.0) {
        return Err(Error::arg("moments must be positive"));
    }
    if second_moment < mean * mean * (1.0 - 1e-12) {
        return Err(Error::arg(format!(
            "impossible moments: E Z^2 = {second_moment} < (E Z)^2 = {}",
            mean * mean
        )));
    }
    Ok(((1.0 - theta).powi(2) * mean * mean / second_moment).min(1.0))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PzRecord {
    pub n: u32,
    pub empirical_frac: f64,
    pub bound: f64,
    /// Binomial standard error sqrt(p(1−p)/N) at p = bound.
    pub stderr: f64,
    pub pass: bool,
}

/// Fraction of samples with Z_n >= θ·mean against the Paley-Zygmund bound.
pub fn pz_empirical_check(stats: &OccupationStats, theta: f64) -> Result<Vec<PzRecord>> {
    let n_samples = stats.n_samples();
    if n_samples < 1000 {
        return Err(Error::arg(format!(
            "the check needs at least 1000 samples per shell, got {n_samples}"
        )));
    }
    let m = n_samples as f64;
    stats
        .ns()
        .enumerate()
        .map(|(k, n)| {
            let mean = stats.mean_hat[k];
            let bound = paley_zygmund_bound(mean, stats.second_moment_hat[k], theta)?;
            let hits = stats.samples[k].iter().filter(|&&z| z >= theta * mean).count();
            let empirical_frac = hits as f64 / m;
            let stderr = (bound * (1.0 - bound) / m).sqrt();
            Ok(PzRecord {
                n,
                empirical_frac,
                bound,
                stderr,
                pass: empirical_frac >= bound - 3.0 * stderr,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{koch_prefractal, line_boundary, snowflake_base_third};
    use crate::quadrature::integrate;
    use crate::stochastic::substream;
    use statrs::function::erf::erfc;

    /// ∫₀^{δ²} P(|N(0, 2s)| ∈ (lo, hi]) ds for the infinite line.
    fn line_mean(lo: f64, hi: f64, delta: f64) -> f64 {
        integrate(
            |s: f64| {
                let tail = |r: f64| erfc(r / (2.0 * s.sqrt()));
                tail(lo) - tail(hi)
            },
            0.0,
            delta * delta,
            1e-12,
            0.0,
        )
    }

    #[test]
    fn pz_bound_values() {
        assert_eq!(paley_zygmund_bound(1.0, 2.0, 0.5).unwrap(), 0.125);
        assert_eq!(paley_zygmund_bound(1.0, 2.0, 1.0).unwrap(), 0.0);
        assert!((paley_zygmund_bound(2.0, 4.0, 0.0).unwrap() - 1.0).abs() < 1e-15);
        assert!(paley_zygmund_bound(1.0, 0.5, 0.5).is_err());
    }

    #[test]
    fn oracle_matches_line_reduction() {
        let line = line_boundary(20.0).unwrap();
        let a: f64 = 1.0 / 3.0;
        for n in 1..=5 {
            let width = a.powi(n) * (1.0 - a);
            let got = occupation_mean_oracle(&line, Point2::ORIGIN, 1.0, a, n as u32, width / 4.0).unwrap();
            let want = line_mean(a.powi(n + 1), a.powi(n), 1.0);
            assert!((got / want - 1.0).abs() < 0.01, "n {n}: {got} vs {want}");
        }
    }

    #[test]
    fn oracle_rejects_coarse_mesh_and_off_curve_start() {
        let line = line_boundary(20.0).unwrap();
        assert!(occupation_mean_oracle(&line, Point2::ORIGIN, 1.0, 1.0 / 3.0, 2, 0.5).is_err());
        assert!(occupation_mean_oracle(&line, Point2::new(0.0, 0.1), 1.0, 1.0 / 3.0, 2, 0.01).is_err());
    }

    #[test]
    fn koch_oracle_tracks_b_n() {
        let k = koch_prefractal(7).unwrap();
        let a: f64 = 1.0 / 3.0;
        let alpha = k.nominal_alpha();
        for n in 1..=4u32 {
            let width = a.powi(n as i32) * (1.0 - a);
            let got = occupation_mean_oracle(&k, snowflake_base_third(), 0.25, a, n, width / 4.0).unwrap();
            let b_n = a.powf(n as f64 * (2.0 - alpha)) * 0.25f64.powf(alpha);
            let ratio = got / b_n;
            assert!(ratio > 0.2 && ratio < 5.0, "n {n}: {ratio}");
        }
    }

    #[test]
    fn samples_respect_range_and_resolution() {
        let line = line_boundary(20.0).unwrap();
        let a: f64 = 1.0 / 3.0;
        let needed = (a.powi(3) * a.powi(3) / 20.0f64).recip().ceil() as usize;
        assert!(matches!(
            occupation_samples(&line, Point2::ORIGIN, 1.0, a, (1, 2), 10, needed / 2, &substream(1, &[])),
            Err(Error::Resolution { .. })
        ));
        let s = occupation_samples(&line, Point2::ORIGIN, 0.5, a, (1, 2), 50, needed, &substream(1, &[])).unwrap();
        for zs in &s.samples {
            assert!(zs.iter().all(|&z| (0.0..=0.25 + 1e-12).contains(&z)));
        }
        assert!(s.b_n.iter().all(|&b| b > 0.0));
    }

    #[test]
    fn line_sample_means_match_oracle() {
        let line = line_boundary(20.0).unwrap();
        let a: f64 = 1.0 / 3.0;
        let n_steps = (20.0 / a.powi(6)).ceil() as usize;
        let s = occupation_samples(&line, Point2::ORIGIN, 1.0, a, (1, 2), 2000, n_steps, &substream(2, &[])).unwrap();
        for (k, n) in s.ns().enumerate() {
            let want = line_mean(a.powi(n as i32 + 1), a.powi(n as i32), 1.0);
            let z = crate::stats::Estimate::from_samples(&s.samples[k]);
            assert!((z.value - want).abs() < 4.0 * z.stderr, "n {n}: {z:?} vs {want}");
        }
        let pz = pz_empirical_check(&s, 0.5).unwrap();
        assert!(pz.iter().all(|r| r.pass && r.empirical_frac >= 0.05));
    }

    #[test]
    fn constant_samples_always_pass() {
        let s = OccupationStats {
            a: 0.5,
            delta: 1.0,
            n_range: (1, 1),
            samples: vec![vec![0.3; 1000]],
            b_n: vec![1.0],
            mean_hat: vec![0.3],
            second_moment_hat: vec![0.09],
            coarse_mean_hat: vec![0.3],
            step: 0.0,
        };
        let r = pz_empirical_check(&s, 0.5).unwrap();
        assert_eq!(r[0].empirical_frac, 1.0);
        assert!(r[0].pass);
        let r = pz_empirical_check(&s, 0.99).unwrap();
        assert!(r[0].bound < 1e-3 && r[0].pass);
    }
}
