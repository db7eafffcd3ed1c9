//! Box-counting dimension and empirical neighborhood-volume regularity.

use std::collections::HashSet;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::boundary::PrefractalBoundary;
use crate::point::{Point2, Segment};
use crate::stats::weighted_line_fit;
use crate::stochastic::rng::RngKey;

/// Ambient dimension of every geometry in this crate.
pub const AMBIENT_DIM: f64 = 2.0;

/// Default number of uniform points per ball in [`regularity_probe`].
pub const DEFAULT_PROBE_POINTS: usize = 1_000_000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegularityReport {
    pub alpha_hat: f64,
    pub alpha_ci: (f64, f64),
    /// Largest observed |K_γ ∩ B(x,r)| / (r^α γ^{d-α}).
    pub c1_hat: Option<f64>,
    /// Smallest observed ratio.
    pub c2_hat: Option<f64>,
    pub scale_range: (f64, f64),
    pub sample_count: usize,
    /// `(scale, count)` for box counting, `(r, γ, ratio)` rows flattened for the probe.
    pub rows: Vec<Vec<f64>>,
}

/// Powers 3^{-k} inside `[lo, hi]`, coarsest first.
fn triadic_scales(lo: f64, hi: f64) -> Vec<f64> {
    let slack = 1e-9;
    let mut out = Vec::new();
    for k in -40i32..=60 {
        let s = 3f64.powi(-k);
        if s >= lo * (1.0 - slack) && s <= hi * (1.0 + slack) {
            out.push(s);
        }
    }
    out
}

/// Cells of side `eps` crossed by a segment, walked with a DDA traversal.
fn mark_cells(seg: &Segment, origin: Point2, eps: f64, cells: &mut HashSet<(i64, i64)>) {
    let a = (seg.a - origin) * (1.0 / eps);
    let b = (seg.b - origin) * (1.0 / eps);
    let (mut ix, mut iy) = (a.x.floor() as i64, a.y.floor() as i64);
    let (ex, ey) = (b.x.floor() as i64, b.y.floor() as i64);
    cells.insert((ix, iy));
    let d = b - a;
    let step_x = if d.x > 0.0 { 1 } else { -1 };
    let step_y = if d.y > 0.0 { 1 } else { -1 };
    let next_x = |ix: i64| if d.x > 0.0 { (ix + 1) as f64 } else { ix as f64 };
    let next_y = |iy: i64| if d.y > 0.0 { (iy + 1) as f64 } else { iy as f64 };
    let mut t_max_x = if d.x != 0.0 { (next_x(ix) - a.x) / d.x } else { f64::INFINITY };
    let mut t_max_y = if d.y != 0.0 { (next_y(iy) - a.y) / d.y } else { f64::INFINITY };
    let t_dx = if d.x != 0.0 { 1.0 / d.x.abs() } else { f64::INFINITY };
    let t_dy = if d.y != 0.0 { 1.0 / d.y.abs() } else { f64::INFINITY };
    let budget = (ex - ix).abs() + (ey - iy).abs();
    for _ in 0..budget {
        if t_max_x < t_max_y {
            if t_max_x > 1.0 {
                break;
            }
            ix += step_x;
            t_max_x += t_dx;
        } else {
            if t_max_y > 1.0 {
                break;
            }
            iy += step_y;
            t_max_y += t_dy;
        }
        cells.insert((ix, iy));
    }
}

/// Number of grid boxes of side `eps` meeting the polyline.
pub fn box_count(boundary: &PrefractalBoundary, eps: f64) -> usize {
    // Offset the grid so that axis-parallel edges never sit on grid lines.
    let bb = boundary.bbox();
    let origin = bb.min - Point2::new(std::f64::consts::FRAC_1_PI * eps, 0.577_215_664_901_533 * eps);
    let mut cells = HashSet::new();
    for s in boundary.segments() {
        mark_cells(s, origin, eps, &mut cells);
    }
    cells.len()
}

/// Least-squares slope of log N(ε) against log(1/ε) over ε = 3^{-k} in `scale_range`.
pub fn minkowski_fit(boundary: &PrefractalBoundary, scale_range: (f64, f64)) -> Result<RegularityReport> {
    let (lo, hi) = scale_range;
    if !(lo > 0.0 && lo < hi) {
        return Err(Error::arg(format!("bad scale range ({lo}, {hi})")));
    }
    if hi > boundary.diameter() * (1.0 + 1e-9) {
        return Err(Error::arg(format!(
            "largest scale {hi} exceeds the boundary diameter {}",
            boundary.diameter()
        )));
    }
    let scales = triadic_scales(lo, hi);
    if scales.len() < 3 {
        return Err(Error::InsufficientScales {
            usable: scales.len(),
        });
    }
    let mut rows = Vec::new();
    let mut pts = Vec::new();
    for &eps in &scales {
        let n = box_count(boundary, eps);
        rows.push(vec![eps, n as f64]);
        pts.push(((1.0 / eps).ln(), (n as f64).ln(), 1.0));
    }
    let fit = weighted_line_fit(&pts)?;
    Ok(RegularityReport {
        alpha_hat: fit.slope,
        alpha_ci: fit.slope_ci95,
        c1_hat: None,
        c2_hat: None,
        scale_range,
        sample_count: scales.len(),
        rows,
    })
}

/// Monte Carlo check of the two-sided neighborhood volume bounds.
///
/// For every pair of triadic scales γ <= r inside `scale_range` and each of
/// `n_centers` random centers x in K_{r/2}, estimates |K_γ ∩ B(x,r)| by
/// uniform rejection sampling in the ball and reports the extreme ratios
/// against r^α γ^{2-α} with α the boundary's nominal exponent.
pub fn regularity_probe(
    boundary: &PrefractalBoundary,
    n_centers: usize,
    scale_range: (f64, f64),
    rng: &RngKey,
) -> Result<RegularityReport> {
    regularity_probe_with(boundary, n_centers, scale_range, DEFAULT_PROBE_POINTS, rng)
}

pub fn regularity_probe_with(
    boundary: &PrefractalBoundary,
    n_centers: usize,
    scale_range: (f64, f64),
    points_per_ball: usize,
    rng: &RngKey,
) -> Result<RegularityReport> {
    if n_centers == 0 || points_per_ball == 0 {
        return Err(Error::arg("regularity probe needs at least one center and one point"));
    }
    let (lo, hi) = scale_range;
    if !(lo > 0.0 && lo <= hi && hi <= 1.0) {
        return Err(Error::arg(format!(
            "scales must satisfy 0 < gamma <= r <= 1, got ({lo}, {hi})"
        )));
    }
    if lo <= boundary.resolution() {
        return Err(Error::arg(format!(
            "smallest scale {lo} does not exceed the prefractal resolution {}",
            boundary.resolution()
        )));
    }
    let scales = triadic_scales(lo, hi);
    if scales.is_empty() {
        return Err(Error::arg("no triadic scale inside the range"));
    }
    let alpha = boundary.nominal_alpha();
    let segs = boundary.segments();
    let mut c1: f64 = 0.0;
    let mut c2 = f64::INFINITY;
    let mut rows = Vec::new();
    let mut samples = 0;
    for (ri, &r) in scales.iter().enumerate() {
        for (gi, &gamma) in scales.iter().enumerate().filter(|&(_, &g)| g <= r) {
            for c in 0..n_centers {
                let mut g = rng
                    .child("scale_pair", (ri * 64 + gi) as u64)
                    .child_rng("center", c as u64);
                // A point of K_{r/2}: a uniform point on a random segment plus
                // a uniform offset in the disk of radius r/2.
                let s = &segs[g.random_range(0..segs.len())];
                let on = s.a + (s.b - s.a) * g.random::<f64>();
                let center = on + uniform_in_disk(&mut g) * (0.5 * r);
                let mut inside = 0usize;
                for _ in 0..points_per_ball {
                    let z = center + uniform_in_disk(&mut g) * r;
                    if boundary.distance_within(z, gamma).is_some() {
                        inside += 1;
                    }
                }
                let area = std::f64::consts::PI * r * r * inside as f64 / points_per_ball as f64;
                let ratio = area / (r.powf(alpha) * gamma.powf(AMBIENT_DIM - alpha));
                c1 = c1.max(ratio);
                c2 = c2.min(ratio);
                rows.push(vec![r, gamma, ratio]);
                samples += 1;
            }
        }
    }
    Ok(RegularityReport {
        alpha_hat: alpha,
        alpha_ci: (alpha, alpha),
        c1_hat: Some(c1),
        c2_hat: Some(c2),
        scale_range,
        sample_count: samples,
        rows,
    })
}

fn uniform_in_disk<R: Rng + ?Sized>(rng: &mut R) -> Point2 {
    loop {
        let p = Point2::new(2.0 * rng.random::<f64>() - 1.0, 2.0 * rng.random::<f64>() - 1.0);
        if p.norm_sq() <= 1.0 {
            return p;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::boundary::{koch_prefractal, line_boundary};
    use crate::stochastic::rng::substream;

    #[test]
    fn triadic_scale_list() {
        let s = triadic_scales(3f64.powi(-7), 3f64.powi(-2));
        assert_eq!(s.len(), 6);
        assert!((s[0] - 1.0 / 9.0).abs() < 1e-15);
    }

    #[test]
    fn dda_marks_all_cells_of_a_diagonal() {
        let mut cells = HashSet::new();
        let s = Segment::new(Point2::new(0.5, 0.25), Point2::new(3.5, 2.75));
        mark_cells(&s, Point2::ORIGIN, 1.0, &mut cells);
        // Brute-force oracle: sample the segment densely.
        let mut dense = HashSet::new();
        for i in 0..=100_000 {
            let t = i as f64 / 100_000.0;
            let p = s.a + (s.b - s.a) * t;
            dense.insert((p.x.floor() as i64, p.y.floor() as i64));
        }
        assert_eq!(cells, dense);
    }

    #[test]
    fn line_and_triangle_are_one_dimensional() {
        let line = line_boundary(1.0).unwrap();
        let r = minkowski_fit(&line, (3f64.powi(-7), 3f64.powi(-1))).unwrap();
        assert!((r.alpha_hat - 1.0).abs() < 0.05, "{}", r.alpha_hat);
        let tri = koch_prefractal(0).unwrap();
        let r = minkowski_fit(&tri, (3f64.powi(-7), 3f64.powi(-1))).unwrap();
        assert!((r.alpha_hat - 1.0).abs() < 0.05, "{}", r.alpha_hat);
    }

    #[test]
    fn too_few_scales() {
        let line = line_boundary(1.0).unwrap();
        assert!(matches!(
            minkowski_fit(&line, (0.1, 0.5)),
            Err(Error::InsufficientScales { usable: 2 })
        ));
    }

    #[test]
    fn probe_rejects_empty_sample() {
        let line = line_boundary(1.0).unwrap();
        assert!(regularity_probe(&line, 0, (0.1, 0.5), &substream(0, &[])).is_err());
    }

    #[test]
    fn line_probe_constants() {
        // For the line, |K_γ ∩ B(x,r)| lies between about rγ and 4rγ.
        let line = line_boundary(10.0).unwrap();
        let rep = regularity_probe_with(&line, 4, (3f64.powi(-4), 1.0 / 3.0), 20_000, &substream(1, &[])).unwrap();
        let (c1, c2) = (rep.c1_hat.unwrap(), rep.c2_hat.unwrap());
        assert!(c2 >= 0.5 && c1 <= 8.0, "c1 {c1} c2 {c2}");
        assert!(c1 >= c2);
    }

    #[test]
    fn full_ball_ratio_is_at_most_pi() {
        let line = line_boundary(10.0).unwrap();
        let rep = regularity_probe_with(&line, 3, (1.0 / 9.0, 1.0 / 9.0), 20_000, &substream(2, &[])).unwrap();
        // γ = r: the ball around a point within r/2 of the line is mostly inside K_r.
        for row in &rep.rows {
            assert!(row[2] <= std::f64::consts::PI + 1e-12 && row[2] > 0.5 * std::f64::consts::PI);
        }
    }
}
