//! Uniform-grid skeletons of Brownian motion and Brownian bridges.
//!
//! Kernel convention throughout: the generator is Δ, so increments over a time
//! step `h` have variance `2h` in each coordinate.

use std::fmt::Write as _;

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::point::Point2;
use crate::stochastic::rng::RngKey;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Path {
    pub times: Vec<f64>,
    pub points: Vec<Point2>,
    pub horizon: f64,
}

impl Path {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn start(&self) -> Point2 {
        self.points[0]
    }

    pub fn end(&self) -> Point2 {
        self.points[self.points.len() - 1]
    }

    /// Position at the grid time closest to `s`.
    pub fn at_time(&self, s: f64) -> Point2 {
        let i = self
            .times
            .partition_point(|&u| u < s)
            .min(self.times.len() - 1);
        let j = if i > 0 && (s - self.times[i - 1]).abs() < (self.times[i] - s).abs() {
            i - 1
        } else {
            i
        };
        self.points[j]
    }

    /// Largest time step of the skeleton.
    pub fn max_step(&self) -> f64 {
        self.times
            .windows(2)
            .map(|w| w[1] - w[0])
            .fold(0.0, f64::max)
    }

    /// Debug dump as `time,x1,x2` rows with a header.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("time,x1,x2\n");
        for (t, p) in self.times.iter().zip(&self.points) {
            let _ = writeln!(out, "{t},{},{}", p.x, p.y);
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BridgePath {
    pub path: Path,
    pub from: Point2,
    pub to: Point2,
}

impl AsRef<Path> for Path {
    fn as_ref(&self) -> &Path {
        self
    }
}

impl AsRef<Path> for BridgePath {
    fn as_ref(&self) -> &Path {
        &self.path
    }
}

fn check_grid(horizon: f64, n_steps: usize) -> Result<()> {
    if !(horizon > 0.0 && horizon.is_finite()) {
        return Err(Error::arg(format!("horizon must be positive, got {horizon}")));
    }
    if n_steps == 0 {
        return Err(Error::arg("n_steps must be at least 1"));
    }
    Ok(())
}

pub(crate) fn uniform_times(horizon: f64, n_steps: usize) -> Vec<f64> {
    let mut times: Vec<f64> = (0..=n_steps)
        .map(|i| horizon * i as f64 / n_steps as f64)
        .collect();
    times[n_steps] = horizon;
    times
}

#[inline]
pub(crate) fn gaussian2<R: Rng + ?Sized>(rng: &mut R) -> Point2 {
    Point2::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
}

/// Brownian skeleton from `x0` on a uniform grid of `n_steps` steps.
pub fn sample_path(rng: &RngKey, x0: Point2, horizon: f64, n_steps: usize) -> Result<Path> {
    check_grid(horizon, n_steps)?;
    let mut r = rng.rng();
    Ok(sample_path_with(&mut r, x0, horizon, n_steps))
}

pub(crate) fn sample_path_with<R: Rng + ?Sized>(
    rng: &mut R,
    x0: Point2,
    horizon: f64,
    n_steps: usize,
) -> Path {
    let times = uniform_times(horizon, n_steps);
    let mut points = Vec::with_capacity(n_steps + 1);
    points.push(x0);
    let mut x = x0;
    for w in times.windows(2) {
        x = x + gaussian2(rng) * (2.0 * (w[1] - w[0])).sqrt();
        points.push(x);
    }
    Path {
        times,
        points,
        horizon,
    }
}

/// Bridge skeleton from `x` to `y` built by forward conditioned increments.
pub fn sample_bridge(
    rng: &RngKey,
    x: Point2,
    y: Point2,
    horizon: f64,
    n_steps: usize,
) -> Result<BridgePath> {
    check_grid(horizon, n_steps)?;
    let mut r = rng.rng();
    Ok(sample_bridge_with(&mut r, x, y, horizon, n_steps))
}

pub(crate) fn sample_bridge_with<R: Rng + ?Sized>(
    rng: &mut R,
    x: Point2,
    y: Point2,
    horizon: f64,
    n_steps: usize,
) -> BridgePath {
    let times = uniform_times(horizon, n_steps);
    let points = bridge_points(rng, x, y, &times);
    BridgePath {
        path: Path {
            times,
            points,
            horizon,
        },
        from: x,
        to: y,
    }
}

/// Conditioned forward recursion: given X_s, the next point X_{s+h} of a
/// bridge ending at y at time t has mean X_s + (h/τ)(y - X_s) and per-coordinate
/// variance 2h(τ - h)/τ, where τ = t - s.
pub(crate) fn bridge_points<R: Rng + ?Sized>(
    rng: &mut R,
    x: Point2,
    y: Point2,
    times: &[f64],
) -> Vec<Point2> {
    let n = times.len() - 1;
    let horizon = times[n];
    let mut points = Vec::with_capacity(n + 1);
    points.push(x);
    let mut cur = x;
    for k in 0..n - 1 {
        let tau = horizon - times[k];
        let h = times[k + 1] - times[k];
        let mean = cur + (y - cur) * (h / tau);
        let sd = (2.0 * h * (tau - h) / tau).sqrt();
        cur = mean + gaussian2(rng) * sd;
        points.push(cur);
    }
    points.push(y);
    points
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stochastic::rng::substream;

    #[test]
    fn grid_shape() {
        let p = sample_path(&substream(1, &[("t", 0)]), Point2::new(1.0, 2.0), 1.5, 10).unwrap();
        assert_eq!(p.len(), 11);
        assert_eq!(p.times[0], 0.0);
        assert_eq!(p.times[10], 1.5);
        assert!(p.times.windows(2).all(|w| w[1] > w[0]));
        assert_eq!(p.start(), Point2::new(1.0, 2.0));
    }

    #[test]
    fn rejects_bad_grids() {
        let k = substream(1, &[]);
        assert!(sample_path(&k, Point2::ORIGIN, 0.0, 4).is_err());
        assert!(sample_path(&k, Point2::ORIGIN, -1.0, 4).is_err());
        assert!(sample_path(&k, Point2::ORIGIN, 1.0, 0).is_err());
        assert!(sample_bridge(&k, Point2::ORIGIN, Point2::ORIGIN, 0.0, 4).is_err());
    }

    #[test]
    fn bridge_endpoints_are_exact() {
        let x = Point2::new(0.25, -1.5);
        let y = Point2::new(3.0, 0.125);
        for n in [1, 2, 7, 64] {
            let b = sample_bridge(&substream(5, &[("b", n as u64)]), x, y, 0.8, n).unwrap();
            assert_eq!(b.path.start(), x);
            assert_eq!(b.path.end(), y);
            assert_eq!(b.from, x);
            assert_eq!(b.to, y);
        }
    }

    #[test]
    fn deterministic_for_key() {
        let k = substream(9, &[("p", 1)]);
        let a = sample_path(&k, Point2::ORIGIN, 1.0, 32).unwrap();
        let b = sample_path(&k, Point2::ORIGIN, 1.0, 32).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn csv_dump_has_header() {
        let p = sample_path(&substream(2, &[]), Point2::ORIGIN, 1.0, 3).unwrap();
        let csv = p.to_csv();
        assert!(csv.starts_with("time,x1,x2\n"));
        assert_eq!(csv.lines().count(), 5);
    }
}
