//! Lazily refined path skeletons for integrands that depend on the path only
//! through which distance band of the boundary it occupies.
//!
//! The integrand is piecewise constant in `d_K`, jumping at a sorted list of
//! radii. A coarse skeleton is drawn first; each interval is then bisected by
//! exact bridge sampling until either it has reached the target step, or the
//! whole bridge over it provably stays inside one band. The proof is the
//! 1-Lipschitz bound on `d_K` along the chord, widened by `K_SIGMA` bridge
//! standard deviations. The result has the law of the uniform-grid midpoint
//! sum at the finest step, except on an event of probability at most
//! `4 exp(-K_SIGMA^2)` per interval.
//!
//! With [`BandSkeleton::with_edge_scaled_steps`] the target step depends on
//! the band edge an interval straddles, growing like the square of its radius.

use rand::Rng;

use crate::geometry::PrefractalBoundary;
use crate::point::Point2;
use crate::stochastic::path::{bridge_points, gaussian2, uniform_times};

/// Excursion guard in units of sqrt(2 dt).
pub const K_SIGMA: f64 = 5.0;

/// Upper bound on the number of coarse intervals.
const COARSE_STEPS: usize = 16;

/// Time spent in each band, at the finest step and at twice that step.
#[derive(Debug, Clone, PartialEq)]
pub struct BandOccupation {
    pub fine: Vec<f64>,
    pub coarse: Vec<f64>,
}

impl BandOccupation {
    fn zeros(n: usize) -> Self {
        BandOccupation {
            fine: vec![0.0; n],
            coarse: vec![0.0; n],
        }
    }

    pub fn total(&self) -> f64 {
        self.fine.iter().sum()
    }
}

#[derive(Clone, Copy)]
struct Node {
    p: Point2,
    /// Exact distance, or a lower bound when `exact` is false.
    d: f64,
    exact: bool,
}

/// Band-occupation integrator over refined Brownian skeletons.
///
/// Bands are indexed by the number of radii strictly below the distance, so
/// band `j` is `(r[j-1], r[j]]`: closed at the outer edge, open at the inner.
#[derive(Debug, Clone)]
pub struct BandSkeleton<'a> {
    boundary: &'a PrefractalBoundary,
    radii: Vec<f64>,
    coarse_steps: usize,
    levels: u32,
    /// Bisection depth at which an interval straddling `radii[j]` is evaluated.
    edge_levels: Vec<u32>,
    horizon: f64,
}

impl<'a> BandSkeleton<'a> {
    /// `n_steps` is the uniform grid the skeleton stands in for; the finest step
    /// actually used is `horizon / effective_steps() <= horizon / n_steps`.
    pub fn new(boundary: &'a PrefractalBoundary, radii: &[f64], horizon: f64, n_steps: usize) -> Self {
        let mut radii = radii.to_vec();
        radii.sort_by(f64::total_cmp);
        let n_steps = n_steps.max(1);
        let coarse_steps = (n_steps / 2).clamp(1, COARSE_STEPS);
        let mut levels = 0;
        while coarse_steps << levels < n_steps {
            levels += 1;
        }
        BandSkeleton {
            boundary,
            edge_levels: vec![levels; radii.len()],
            radii,
            coarse_steps,
            levels,
            horizon,
        }
    }

    /// Lets the finest step grow with the radius of the band edge being
    /// resolved: near an edge at radius r the step is `fine_step() * (r / r_min)^2`,
    /// rounded down to the dyadic grid. Resolution rules of the form
    /// step <= c * r^2 then hold edge by edge while coarse edges stop
    /// refining early.
    pub fn with_edge_scaled_steps(mut self) -> Self {
        let Some(&r_min) = self.radii.first() else {
            return self;
        };
        let coarse_dt = self.horizon / self.coarse_steps as f64;
        let fine = self.fine_step();
        self.edge_levels = self
            .radii
            .iter()
            .map(|&r| {
                let target = fine * (r / r_min).powi(2);
                let mut level = 0;
                while level < self.levels && coarse_dt / (1u64 << level) as f64 > target * (1.0 + 1e-12) {
                    level += 1;
                }
                level
            })
            .collect();
        self
    }

    /// Finest step used near the band edge at `radii()[j]`.
    pub fn edge_step(&self, j: usize) -> f64 {
        self.horizon / (self.coarse_steps << self.edge_levels[j]) as f64
    }

    pub fn radii(&self) -> &[f64] {
        &self.radii
    }

    pub fn n_bands(&self) -> usize {
        self.radii.len() + 1
    }

    pub fn effective_steps(&self) -> usize {
        self.coarse_steps << self.levels
    }

    pub fn fine_step(&self) -> f64 {
        self.horizon / self.effective_steps() as f64
    }

    #[inline]
    pub fn band_of(&self, d: f64) -> usize {
        self.radii.partition_point(|&r| r < d)
    }

    /// Band of a point; the search stops at the outermost radius.
    #[inline]
    fn band_at(&self, p: Point2) -> usize {
        match self.boundary.distance_within(p, self.r_max()) {
            Some(d) => self.band_of(d),
            None => self.radii.len(),
        }
    }

    fn r_max(&self) -> f64 {
        self.radii.last().copied().unwrap_or(0.0)
    }

    fn node(&self, p: Point2, slack: f64) -> Node {
        if self.radii.is_empty() {
            return Node {
                p,
                d: f64::INFINITY,
                exact: false,
            };
        }
        let cap = self.r_max() + slack;
        match self.boundary.distance_within(p, cap) {
            Some(d) => Node { p, d, exact: true },
            None => Node {
                p,
                d: cap,
                exact: false,
            },
        }
    }

    fn make_exact(&self, n: &mut Node) {
        if !n.exact {
            n.d = self.boundary.distance(n.p);
            n.exact = true;
        }
    }

    /// Occupation of a Brownian path started at `x0`.
    pub fn forward<R: Rng + ?Sized>(&self, rng: &mut R, x0: Point2) -> BandOccupation {
        let times = uniform_times(self.horizon, self.coarse_steps);
        let mut pts = Vec::with_capacity(times.len());
        pts.push(x0);
        let mut x = x0;
        for w in times.windows(2) {
            x = x + gaussian2(rng) * (2.0 * (w[1] - w[0])).sqrt();
            pts.push(x);
        }
        self.integrate_skeleton(rng, &pts)
    }

    /// Occupation of a Brownian bridge from `x` to `y` over the horizon.
    pub fn bridge<R: Rng + ?Sized>(&self, rng: &mut R, x: Point2, y: Point2) -> BandOccupation {
        let times = uniform_times(self.horizon, self.coarse_steps);
        let pts = bridge_points(rng, x, y, &times);
        self.integrate_skeleton(rng, &pts)
    }

    fn integrate_skeleton<R: Rng + ?Sized>(&self, rng: &mut R, pts: &[Point2]) -> BandOccupation {
        let dt = self.horizon / self.coarse_steps as f64;
        let slack = 4.0 * K_SIGMA * (2.0 * dt).sqrt();
        let mut occ = BandOccupation::zeros(self.n_bands());
        let mut prev = self.node(pts[0], slack);
        for &p in &pts[1..] {
            let next = self.node(p, slack);
            self.interval(rng, prev, next, dt, 0, false, &mut occ);
            prev = next;
        }
        if self.levels == 0 {
            occ.coarse.clone_from(&occ.fine);
        }
        occ
    }

    #[allow(clippy::too_many_arguments)]
    fn interval<R: Rng + ?Sized>(
        &self,
        rng: &mut R,
        mut a: Node,
        mut b: Node,
        dt: f64,
        level: u32,
        coarse_done: bool,
        occ: &mut BandOccupation,
    ) {
        let chord = a.p.dist(b.p);
        let spread = K_SIGMA * (2.0 * dt).sqrt();
        let r_max = self.r_max();
        let mut lo = 0.5 * (a.d + b.d - chord) - spread;
        if lo > r_max {
            let last = self.radii.len();
            occ.fine[last] += dt;
            if !coarse_done {
                occ.coarse[last] += dt;
            }
            return;
        }
        if !(a.exact && b.exact) {
            self.make_exact(&mut a);
            self.make_exact(&mut b);
            lo = 0.5 * (a.d + b.d - chord) - spread;
        }
        let hi = 0.5 * (a.d + b.d + chord) + spread;
        let band_lo = self.band_of(lo.max(0.0));
        if band_lo == self.band_of(hi) {
            occ.fine[band_lo] += dt;
            if !coarse_done {
                occ.coarse[band_lo] += dt;
            }
            return;
        }
        let target = self.edge_levels[band_lo];
        if level >= target {
            let band = self.band_at(a.p.midpoint(b.p));
            occ.fine[band] += dt;
            if !coarse_done {
                occ.coarse[band] += dt;
            }
            return;
        }
        let children_finest = level + 1 == target;
        if children_finest {
            occ.coarse[self.band_at(a.p.midpoint(b.p))] += dt;
        }
        let q = a.p.midpoint(b.p) + gaussian2(rng) * (0.5 * dt).sqrt();
        let mid = self.node(q, 4.0 * spread + chord);
        let half = 0.5 * dt;
        let done = coarse_done || children_finest;
        self.interval(rng, a, mid, half, level + 1, done, occ);
        self.interval(rng, mid, b, half, level + 1, done, occ);
    }
}
