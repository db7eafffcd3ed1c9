//! Area integrals over distance bands {r_{j-1} < d_K <= r_j} by adaptive quadtree.
//!
//! Cells whose distance range (from the 1-Lipschitz bound) lies in one band get
//! a 2x2 Gauss rule once they are small relative to their distance from K and
//! from the integrand's singular point. Cells cut by a band edge are refined to
//! a fraction of the edge radius, then clipped against the distance function
//! linearized at the cell center and integrated by a centroid rule.

use crate::geometry::PrefractalBoundary;
use crate::point::Point2;

const GAUSS_OFFSET: f64 = 0.577_350_269_189_625_8;

#[derive(Debug, Clone)]
pub(crate) struct BandQuadrature<'a> {
    pub boundary: &'a PrefractalBoundary,
    /// Sorted band edges; band 0 (d <= radii[0]) is never integrated.
    pub radii: Vec<f64>,
    /// Square region: center and half side.
    pub center: Point2,
    pub half_side: f64,
    /// Point where the integrand may be singular.
    pub singular: Option<Point2>,
    /// Interior cells satisfy side <= smooth_ratio · (distance to K or to the singular point).
    pub smooth_ratio: f64,
    /// Largest interior cell side anywhere.
    pub max_side: f64,
    /// Edge cells satisfy side <= edge_ratio · r for the edge radius r they cut.
    pub edge_ratio: f64,
    /// Optional absolute cap on edge-cell sides.
    pub mesh: Option<f64>,
    /// Cells around the singular point stop refining at this side.
    pub singular_floor: f64,
}

impl<'a> BandQuadrature<'a> {
    pub fn new(boundary: &'a PrefractalBoundary, radii: &[f64], center: Point2, half_side: f64) -> Self {
        let mut radii = radii.to_vec();
        radii.sort_by(f64::total_cmp);
        BandQuadrature {
            boundary,
            radii,
            center,
            half_side,
            singular: None,
            smooth_ratio: 0.25,
            max_side: f64::INFINITY,
            edge_ratio: 0.125,
            mesh: None,
            singular_floor: 1e-7,
        }
    }

    fn band_of(&self, d: f64) -> usize {
        self.radii.partition_point(|&r| r < d)
    }

    /// Integral of `f(z, d_K(z))` over each band; entry 0 is always zero.
    pub fn integrate<F: Fn(Point2, f64) -> f64>(&self, f: F) -> Vec<f64> {
        let mut out = vec![0.0; self.radii.len() + 1];
        let mut stack = vec![(self.center, self.half_side)];
        while let Some((c, h)) = stack.pop() {
            if self.cell(&f, c, h, &mut out) {
                let q = 0.5 * h;
                for (sx, sy) in [(-1.0, -1.0), (1.0, -1.0), (-1.0, 1.0), (1.0, 1.0)] {
                    stack.push((c + Point2::new(sx * q, sy * q), q));
                }
            }
        }
        out
    }

    /// Integrates the cell or returns true if it must be split.
    fn cell<F: Fn(Point2, f64) -> f64>(&self, f: &F, c: Point2, h: f64, out: &mut [f64]) -> bool {
        let side = 2.0 * h;
        let diag = h * std::f64::consts::SQRT_2;
        let r0 = self.radii[0];
        let r_max = *self.radii.last().unwrap();
        let d = self.boundary.distance(c);
        if d + diag <= r0 {
            return false;
        }
        let near_singular = self.singular.map(|s| {
            let gap = (c - s).norm() - diag;
            (gap, side > self.singular_floor)
        });
        if let Some((gap, can_split)) = near_singular {
            if can_split && side > self.smooth_ratio * gap.max(0.0) {
                return true;
            }
        }
        let lo = (d - diag).max(0.0);
        let b_lo = self.band_of(lo);
        let b_hi = self.band_of(d + diag);
        if b_lo == b_hi {
            let scale = if b_lo > self.radii.len() - 1 { lo.max(r_max) } else { lo };
            if side > self.max_side || side > self.smooth_ratio * scale {
                return true;
            }
            let g = GAUSS_OFFSET * h;
            let mut s = 0.0;
            for (ox, oy) in [(-g, -g), (g, -g), (-g, g), (g, g)] {
                let z = c + Point2::new(ox, oy);
                s += f(z, self.boundary.distance(z));
            }
            out[b_lo] += s * side * side / 4.0;
            return false;
        }
        // The cell is cut by the edges radii[b_lo..b_hi].
        let edge = self.radii[b_lo];
        let mut limit = self.edge_ratio * edge;
        if let Some(m) = self.mesh {
            limit = limit.min(m);
        }
        if side > limit {
            return true;
        }
        let (p, dn) = self.boundary.nearest_point(c);
        let grad = if dn > 0.0 {
            (c - p) * (1.0 / dn)
        } else {
            Point2::new(0.0, 1.0)
        };
        let square = [
            Point2::new(-h, -h),
            Point2::new(h, -h),
            Point2::new(h, h),
            Point2::new(-h, h),
        ];
        for band in b_lo.max(1)..=b_hi {
            // Band `band` is r_{band-1} < d <= r_band with d ≈ dn + grad·u.
            let mut poly = square.to_vec();
            poly = clip(&poly, grad, self.radii[band - 1] - dn, false);
            if band < self.radii.len() {
                poly = clip(&poly, grad, self.radii[band] - dn, true);
            }
            let (area, centroid) = area_centroid(&poly);
            if area > 0.0 {
                let z = c + centroid;
                let dz = (dn + grad.dot(centroid)).max(0.0);
                out[band] += f(z, dz) * area;
            }
        }
        false
    }
}

/// Sutherland-Hodgman clip by `g·u <= k` (keep_below) or `g·u > k`.
fn clip(poly: &[Point2], g: Point2, k: f64, keep_below: bool) -> Vec<Point2> {
    let side = |u: Point2| {
        let s = g.dot(u) - k;
        if keep_below {
            -s
        } else {
            s
        }
    };
    let mut out = Vec::with_capacity(poly.len() + 2);
    for i in 0..poly.len() {
        let a = poly[i];
        let b = poly[(i + 1) % poly.len()];
        let (sa, sb) = (side(a), side(b));
        if sa >= 0.0 {
            out.push(a);
        }
        if (sa >= 0.0) != (sb >= 0.0) {
            let t = sa / (sa - sb);
            out.push(a + (b - a) * t);
        }
    }
    out
}

fn area_centroid(poly: &[Point2]) -> (f64, Point2) {
    if poly.len() < 3 {
        return (0.0, Point2::ORIGIN);
    }
    let mut a2 = 0.0;
    let mut cx = 0.0;
    let mut cy = 0.0;
    for i in 0..poly.len() {
        let p = poly[i];
        let q = poly[(i + 1) % poly.len()];
        let w = p.cross(q);
        a2 += w;
        cx += (p.x + q.x) * w;
        cy += (p.y + q.y) * w;
    }
    if a2.abs() < 1e-300 {
        return (0.0, Point2::ORIGIN);
    }
    (0.5 * a2.abs(), Point2::new(cx / (3.0 * a2), cy / (3.0 * a2)))
}
