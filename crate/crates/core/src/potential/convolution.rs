//! Finiteness of V * Γ_t(x) from the contributions of triadic shells around K.
//!
//! Shell n is {a^{n+1} < d_K <= a^n} with a = 1/3. Its contribution c_n behaves
//! like a^{n(2-α-β)}, so the ratios c_n / c_{n-1} settle to a constant r. The
//! integral is finite when r < 1; the unresolved tail beyond the last shell is
//! then c_N r / (1 - r), and the verdict requires the tail-corrected total to
//! stop moving between the last two shells.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::PrefractalBoundary;
use crate::point::Point2;
use crate::potential::bands::BandQuadrature;
use crate::potential::gamma::gamma2;
use crate::potential::PotentialSpec;
use crate::stats::pairwise_sum;

/// Width ratio between consecutive shells.
pub const SHELL_RATIO: f64 = 1.0 / 3.0;

/// Ratios above 1 − this margin are read as non-contracting.
const CONTRACTION_MARGIN: f64 = 0.02;

/// Cauchy tolerance on successive tail-corrected totals.
const CAUCHY_TOL: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "verdict")]
pub enum Verdict {
    Finite { value: f64 },
    Diverging { growth_per_level: f64 },
}

impl Verdict {
    pub fn is_finite(&self) -> bool {
        matches!(self, Verdict::Finite { .. })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvolutionReport {
    pub verdict: Verdict,
    /// Contribution of the region d_K > 1.
    pub outer: f64,
    /// c_0, …, c_N.
    pub shells: Vec<f64>,
    /// c_n / c_{n-1} for n = 1..=N.
    pub ratios: Vec<f64>,
    /// Tail-corrected totals after each shell (NaN while not contracting).
    pub extrapolated: Vec<f64>,
}

/// ∫ V(z) Γ_t(|x − z|) dz in the plane over shells n = 0..=mesh_levels.
pub fn convolve_potential_gamma(
    spec: &PotentialSpec,
    boundary: &PrefractalBoundary,
    x: Point2,
    t: f64,
    mesh_levels: u32,
) -> Result<ConvolutionReport> {
    spec.validate()?;
    if !(t > 0.0 && t.is_finite()) {
        return Err(Error::arg(format!("t must be positive, got {t}")));
    }
    if mesh_levels < 2 {
        return Err(Error::arg("at least three shells are needed (mesh_levels >= 2)"));
    }
    let dx = boundary.distance(x);
    if dx <= 1e-12 {
        return Err(Error::arg("x lies on the boundary"));
    }
    let innermost = SHELL_RATIO.powi(mesh_levels as i32 + 1);
    if innermost < 3.0 * boundary.resolution() * (1.0 - 1e-9) {
        return Err(Error::arg(format!(
            "shell {mesh_levels} is thinner than the prefractal resolution {:e}; raise the level or lower mesh_levels",
            boundary.resolution()
        )));
    }
    let radii: Vec<f64> = (0..=mesh_levels + 1)
        .rev()
        .map(|n| SHELL_RATIO.powi(n as i32))
        .collect();
    // Γ_t(R) is below e^{-30} of its scale beyond R = sqrt(120 t).
    let reach = (120.0 * t).sqrt();
    let mut q = BandQuadrature::new(boundary, &radii, x, reach);
    q.singular = Some(x);
    q.max_side = 0.25 * t.sqrt();
    let v = *spec;
    let bands = q.integrate(|z, d| {
        let r = z.dist(x);
        if r == 0.0 {
            return 0.0;
        }
        v.eval_at_distance(d) * gamma2(r, t)
    });
    // bands[j] for j = 1..=mesh_levels+1 is shell n = mesh_levels + 1 − j.
    let n_shells = mesh_levels as usize + 1;
    let shells: Vec<f64> = (0..n_shells).map(|n| bands[n_shells - n]).collect();
    let outer = bands[n_shells + 1];
    Ok(verdict_from_shells(outer, shells))
}

pub(crate) fn verdict_from_shells(outer: f64, shells: Vec<f64>) -> ConvolutionReport {
    let ratios: Vec<f64> = shells.windows(2).map(|w| w[1] / w[0]).collect();
    let mut extrapolated = Vec::with_capacity(shells.len());
    for n in 0..shells.len() {
        let partial = outer + pairwise_sum(&shells[..=n]);
        let est = match n.checked_sub(1).map(|k| ratios[k]) {
            Some(r) if r < 1.0 => partial + shells[n] * r / (1.0 - r),
            _ => f64::NAN,
        };
        extrapolated.push(est);
    }
    let r_last = *ratios.last().unwrap();
    let n = extrapolated.len();
    let (s1, s0) = (extrapolated[n - 1], extrapolated[n - 2]);
    let settled = s1.is_finite() && s0.is_finite() && ((s1 - s0) / s1).abs() < CAUCHY_TOL;
    let verdict = if r_last <= 1.0 - CONTRACTION_MARGIN && settled {
        Verdict::Finite { value: s1 }
    } else {
        Verdict::Diverging {
            growth_per_level: r_last,
        }
    };
    ConvolutionReport {
        verdict,
        outer,
        shells,
        ratios,
        extrapolated,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::line_boundary;
    use crate::quadrature::integrate;

    #[test]
    fn geometric_shells() {
        let shells: Vec<f64> = (0..8).map(|n| 0.5f64.powi(n)).collect();
        let rep = verdict_from_shells(1.0, shells);
        match rep.verdict {
            Verdict::Finite { value } => assert!((value - 3.0).abs() < 1e-12),
            v => panic!("{v:?}"),
        }
        let flat = vec![1.0; 8];
        assert!(!verdict_from_shells(0.0, flat).verdict.is_finite());
    }

    #[test]
    fn rejects_points_on_the_boundary() {
        let line = line_boundary(5.0).unwrap();
        let s = PotentialSpec::singular(0.5);
        assert!(convolve_potential_gamma(&s, &line, Point2::new(0.0, 0.0), 1.0, 6).is_err());
    }

    #[test]
    fn line_shells_match_strip_oracle() {
        // For a long line and x = (0, h), shell n is two strips; integrate
        // y^{-β} Γ_t(|x − (u, ±y)|) in (u, y) with nested 1D quadrature.
        let hw = 8.0;
        let line = line_boundary(hw).unwrap();
        let beta = 0.5;
        let x = Point2::new(0.0, 0.5);
        let t = 1.0;
        let rep = convolve_potential_gamma(&PotentialSpec::singular(beta), &line, x, t, 6).unwrap();
        let strip = |y_lo: f64, y_hi: f64| {
            let side = |sign: f64| {
                integrate(
                    |y: f64| {
                        y.powf(-beta)
                            * integrate(
                                |u: f64| {
                                    let r = Point2::new(u, sign * y).dist(x);
                                    // Round ends of the finite segment are negligible here.
                                    gamma2(r, t)
                                },
                                -hw,
                                hw,
                                1e-9,
                                0.0,
                            )
                    },
                    y_lo,
                    y_hi,
                    1e-9,
                    0.0,
                )
            };
            side(1.0) + side(-1.0)
        };
        for n in [2, 4, 6] {
            let want = strip(SHELL_RATIO.powi(n + 1), SHELL_RATIO.powi(n));
            let got = rep.shells[n as usize];
            assert!((got - want).abs() < 2e-3 * want, "shell {n}: {got} vs {want}");
        }
    }

    #[test]
    fn line_threshold() {
        let line = line_boundary(8.0).unwrap();
        let x = Point2::new(0.0, 0.5);
        let sub = convolve_potential_gamma(&PotentialSpec::singular(0.5), &line, x, 1.0, 6).unwrap();
        assert!(sub.verdict.is_finite(), "{sub:?}");
        let crit = convolve_potential_gamma(&PotentialSpec::singular(1.0), &line, x, 1.0, 6).unwrap();
        assert!(!crit.verdict.is_finite(), "{crit:?}");
    }
}
