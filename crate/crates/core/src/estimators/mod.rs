//! Monte Carlo estimators and exponent fits built on the samplers.

mod fits;
mod harmonic;
mod kernel;
mod occupation;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::geometry::PrefractalBoundary;
use crate::point::Point2;
use crate::stats::{pairwise_sum, Estimate};

pub use fits::{decay_rate_fit, divergence_growth_fit, divergence_sweep, DivergencePoint};
pub(crate) use fits::fit_medians;
pub use harmonic::{harmonic_exponent_fit, harmonic_profile, AccessRay, HarmonicPoint};
pub use kernel::{crossing_mass_estimate, crossing_mass_sweep, kernel_bridge_estimate, SweepPoint};
pub use occupation::{
    occupation_mean_oracle, occupation_samples, paley_zygmund_bound, pz_empirical_check,
    OccupationStats, PzRecord,
};

/// Paths per work unit. Sums inside a chunk run in index order and chunk
/// totals are combined pairwise, so results do not depend on the worker count.
const CHUNK: u64 = 1024;

/// Evaluates `f(i)` for i in 0..n in parallel, keeping index order.
pub(crate) fn par_map<T, F>(n: u64, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(u64) -> T + Sync,
{
    (0..n).into_par_iter().map(&f).collect()
}

/// Per-slot sums and sums of squares of `f(i, out)` over i in 0..n.
pub(crate) fn par_moments<F>(n: u64, slots: usize, f: F) -> (Vec<f64>, Vec<f64>)
where
    F: Fn(u64, &mut [f64]) + Sync,
{
    let n_chunks = n.div_ceil(CHUNK);
    let chunks: Vec<(Vec<f64>, Vec<f64>)> = (0..n_chunks)
        .into_par_iter()
        .map(|c| {
            let mut s1 = vec![0.0; slots];
            let mut s2 = vec![0.0; slots];
            let mut buf = vec![0.0; slots];
            for i in c * CHUNK..((c + 1) * CHUNK).min(n) {
                buf.iter_mut().for_each(|b| *b = 0.0);
                f(i, &mut buf);
                for k in 0..slots {
                    s1[k] += buf[k];
                    s2[k] += buf[k] * buf[k];
                }
            }
            (s1, s2)
        })
        .collect();
    let combine = |pick: &dyn Fn(&(Vec<f64>, Vec<f64>)) -> f64| {
        let v: Vec<f64> = chunks.iter().map(pick).collect();
        pairwise_sum(&v)
    };
    let s1 = (0..slots).map(|k| combine(&|c| c.0[k])).collect();
    let s2 = (0..slots).map(|k| combine(&|c| c.1[k])).collect();
    (s1, s2)
}

/// Mean and standard error from a sum and a sum of squares.
pub(crate) fn estimate_from_moments(s1: f64, s2: f64, n: u64) -> Estimate {
    let nf = n as f64;
    let mean = s1 / nf;
    let var = if n > 1 {
        ((s2 - nf * mean * mean) / (nf - 1.0)).max(0.0)
    } else {
        0.0
    };
    Estimate::new(mean, (var / nf).sqrt(), n as usize)
}

/// True when `p` and `q` lie in different components of the complement of K.
///
/// Closed curves use the even-odd rule; a single open segment separates the
/// two sides of its supporting line.
pub(crate) fn separated(boundary: &PrefractalBoundary, p: Point2, q: Point2) -> Result<bool> {
    if boundary.is_closed() {
        let parity = |z: Point2| boundary.ray_crossings(z) % 2;
        return Ok(parity(p) != parity(q));
    }
    match boundary.segments() {
        [s] => {
            let side = |z: Point2| (s.b - s.a).cross(z - s.a);
            Ok(side(p) * side(q) < 0.0)
        }
        _ => Err(Error::UnsupportedDomain(
            "component test needs a closed curve or a single segment".into(),
        )),
    }
}

/// Errors unless `values` has at least `min` entries with a constant ratio.
pub(crate) fn check_geometric(values: &[f64], min: usize, what: &str) -> Result<()> {
    if values.len() < min {
        return Err(Error::arg(format!(
            "{what} needs at least {min} values, got {}",
            values.len()
        )));
    }
    if values.iter().any(|v| !(*v > 0.0 && v.is_finite())) {
        return Err(Error::arg(format!("{what} must be positive")));
    }
    let r0 = values[1] / values[0];
    if (r0 - 1.0).abs() < 1e-12 {
        return Err(Error::arg(format!("{what} must not repeat values")));
    }
    for w in values.windows(2) {
        if ((w[1] / w[0]) / r0 - 1.0).abs() > 1e-6 {
            return Err(Error::arg(format!("{what} must be a geometric sequence")));
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{koch_prefractal, line_boundary, snowflake_centroid};

    #[test]
    fn moments_match_direct_sums() {
        let (s1, s2) = par_moments(5000, 2, |i, out| {
            out[0] = i as f64;
            out[1] = 1.0;
        });
        assert_eq!(s1[0], (0..5000).sum::<u64>() as f64);
        assert_eq!(s1[1], 5000.0);
        assert_eq!(s2[1], 5000.0);
        let e = estimate_from_moments(s1[1], s2[1], 5000);
        assert_eq!(e.value, 1.0);
        assert_eq!(e.stderr, 0.0);
    }

    #[test]
    fn moments_do_not_depend_on_worker_count() {
        let f = |i: u64, out: &mut [f64]| out[0] = ((i * 2654435761) % 1000) as f64 / 7.0;
        let one = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
        let four = rayon::ThreadPoolBuilder::new().num_threads(4).build().unwrap();
        let a = one.install(|| par_moments(100_000, 1, f));
        let b = four.install(|| par_moments(100_000, 1, f));
        assert_eq!(a.0[0].to_bits(), b.0[0].to_bits());
        assert_eq!(a.1[0].to_bits(), b.1[0].to_bits());
    }

    #[test]
    fn component_separation() {
        let line = line_boundary(5.0).unwrap();
        assert!(separated(&line, Point2::new(0.0, 1.0), Point2::new(3.0, -2.0)).unwrap());
        assert!(!separated(&line, Point2::new(0.0, 1.0), Point2::new(3.0, 2.0)).unwrap());
        let k = koch_prefractal(3).unwrap();
        assert!(separated(&k, snowflake_centroid(), Point2::new(0.5, -2.0)).unwrap());
        assert!(!separated(&k, snowflake_centroid(), Point2::new(0.5, 0.3)).unwrap());
    }

    #[test]
    fn geometric_check() {
        assert!(check_geometric(&[4.0, 8.0, 16.0, 32.0], 4, "A").is_ok());
        assert!(check_geometric(&[4.0, 8.0, 16.0], 4, "A").is_err());
        assert!(check_geometric(&[4.0, 8.0, 16.0, 30.0], 4, "A").is_err());
        assert!(check_geometric(&[4.0, 4.0, 4.0, 4.0], 4, "A").is_err());
    }
}
