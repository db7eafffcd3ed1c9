//! Boundary-singular potentials, Feynman-Kac functionals along skeletons,
//! time-integrated heat kernels and the convolution finiteness test.

pub(crate) mod bands;
mod convolution;
mod gamma;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::PrefractalBoundary;
use crate::point::Point2;
use crate::stochastic::{BandOccupation, BandSkeleton, Path};

pub use convolution::{convolve_potential_gamma, ConvolutionReport, Verdict, SHELL_RATIO};
pub use gamma::{exp_integral_e1, gamma_t};

/// V(x) = c_v d_K(x)^{-β}, optionally truncated to c_v A^β on {d_K <= 1/A}.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PotentialSpec {
    pub beta: f64,
    pub c_v: f64,
    /// `None` means A = ∞ (the singular potential).
    pub truncation_a: Option<f64>,
    /// V ≡ constant, overriding everything else.
    pub constant_override: Option<f64>,
}

impl PotentialSpec {
    pub fn singular(beta: f64) -> Self {
        PotentialSpec {
            beta,
            c_v: 1.0,
            truncation_a: None,
            constant_override: None,
        }
    }

    pub fn truncated(beta: f64, a: f64) -> Self {
        PotentialSpec {
            truncation_a: Some(a),
            ..Self::singular(beta)
        }
    }

    pub fn constant(c: f64) -> Self {
        PotentialSpec {
            constant_override: Some(c),
            ..Self::singular(0.0)
        }
    }

    /// V ≡ 0.
    pub fn zero() -> Self {
        Self::constant(0.0)
    }

    pub fn with_c_v(mut self, c_v: f64) -> Self {
        self.c_v = c_v;
        self
    }

    pub fn with_truncation(mut self, a: f64) -> Self {
        self.truncation_a = Some(a);
        self
    }

    pub fn validate(&self) -> Result<()> {
        if let Some(c) = self.constant_override {
            if !(c >= 0.0 && c.is_finite()) {
                return Err(Error::arg(format!("constant potential must be >= 0, got {c}")));
            }
            return Ok(());
        }
        if !(self.beta >= 0.0 && self.beta.is_finite()) {
            return Err(Error::arg(format!("beta must be >= 0, got {}", self.beta)));
        }
        if !(self.c_v > 0.0 && self.c_v.is_finite()) {
            return Err(Error::arg(format!("c_v must be positive, got {}", self.c_v)));
        }
        if let Some(a) = self.truncation_a {
            if !(a > 0.0 && a.is_finite()) {
                return Err(Error::arg(format!("truncation level must be positive, got {a}")));
            }
        }
        Ok(())
    }

    pub fn is_path_integrable(&self) -> bool {
        self.constant_override.is_some() || self.truncation_a.is_some()
    }

    /// Height c_v A^β of a truncated potential.
    pub fn level(&self) -> Option<f64> {
        self.truncation_a.map(|a| self.c_v * a.powf(self.beta))
    }

    /// Support radius 1/A of a truncated potential.
    pub fn cutoff(&self) -> Option<f64> {
        self.truncation_a.map(|a| 1.0 / a)
    }

    /// Largest skeleton step resolving the 1/A shell: (1/(10A))^2 / 2.
    pub fn max_step(&self) -> Option<f64> {
        if self.constant_override.is_some() {
            return None;
        }
        self.truncation_a.map(|a| (0.1 / a).powi(2) * 0.5)
    }

    /// Smallest uniform step count on `[0, horizon]` that satisfies [`Self::max_step`].
    pub fn required_steps(&self, horizon: f64) -> usize {
        match self.max_step() {
            Some(h) => (horizon / h * (1.0 - 1e-12)).ceil().max(1.0) as usize,
            None => 1,
        }
    }

    /// Fails with a resolution error if `n_steps` uniform steps are too coarse.
    pub fn check_resolution(&self, horizon: f64, n_steps: usize) -> Result<()> {
        self.validate()?;
        if !self.is_path_integrable() {
            return Err(Error::UnsupportedSingularity);
        }
        if let Some(max_step) = self.max_step() {
            let step = horizon / n_steps.max(1) as f64;
            if step > max_step * (1.0 + 1e-12) {
                return Err(Error::Resolution {
                    what: format!("the 1/A = {:e} potential shell", self.cutoff().unwrap()),
                    step,
                    max_step,
                    required_n_steps: self.required_steps(horizon),
                });
            }
        }
        Ok(())
    }

    fn eval_at_distance(&self, d: f64) -> f64 {
        if let Some(c) = self.constant_override {
            return c;
        }
        match self.truncation_a {
            Some(a) => {
                if d <= 1.0 / a {
                    self.c_v * a.powf(self.beta)
                } else {
                    0.0
                }
            }
            None => {
                if d == 0.0 {
                    f64::INFINITY
                } else {
                    self.c_v * d.powf(-self.beta)
                }
            }
        }
    }
}

impl Default for PotentialSpec {
    fn default() -> Self {
        Self::singular(1.0)
    }
}

/// Pointwise potential; +∞ on K for the singular potential.
pub fn potential_eval(spec: &PotentialSpec, boundary: &PrefractalBoundary, point: Point2) -> f64 {
    if let Some(c) = spec.constant_override {
        return c;
    }
    spec.eval_at_distance(boundary.distance(point))
}

/// A_V(t) on a skeleton, with the same sum at twice the step for comparison.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FunctionalValue {
    pub value: f64,
    pub step: f64,
    /// |value − value at double step|.
    pub refinement_delta: f64,
}

impl FunctionalValue {
    /// Truncated functional from the time the path spent in band 0 (d_K <= 1/A).
    pub fn from_occupation(occ: &BandOccupation, spec: &PotentialSpec, step: f64) -> Self {
        let level = spec.level().unwrap_or(0.0);
        let value = level * occ.fine[0];
        let coarse = level * occ.coarse[0];
        FunctionalValue {
            value,
            step,
            refinement_delta: (value - coarse).abs(),
        }
    }
}

/// Midpoint-rule A_V(t) along the skeleton of `path`.
pub fn fk_functional<P: AsRef<Path>>(
    path: &P,
    spec: &PotentialSpec,
    boundary: &PrefractalBoundary,
) -> Result<FunctionalValue> {
    let path = path.as_ref();
    spec.validate()?;
    if path.len() < 2 {
        return Err(Error::arg("path needs at least two points"));
    }
    let step = path.max_step();
    if let Some(c) = spec.constant_override {
        return Ok(FunctionalValue {
            value: c * path.horizon,
            step,
            refinement_delta: 0.0,
        });
    }
    if spec.truncation_a.is_none() {
        return Err(Error::UnsupportedSingularity);
    }
    let max_step = spec.max_step().unwrap();
    if step > max_step * (1.0 + 1e-12) {
        return Err(Error::Resolution {
            what: format!("the 1/A = {:e} potential shell", spec.cutoff().unwrap()),
            step,
            max_step,
            required_n_steps: spec.required_steps(path.horizon),
        });
    }
    let value = midpoint_sum(path, spec, boundary, 1);
    let coarse = midpoint_sum(path, spec, boundary, 2);
    Ok(FunctionalValue {
        value,
        step,
        refinement_delta: (value - coarse).abs(),
    })
}

fn midpoint_sum(path: &Path, spec: &PotentialSpec, boundary: &PrefractalBoundary, stride: usize) -> f64 {
    let cutoff = spec.cutoff().unwrap();
    let mut terms = Vec::with_capacity(path.len() / stride + 1);
    let last = path.len() - 1;
    let mut i = 0;
    while i < last {
        let j = (i + stride).min(last);
        let m = path.points[i].midpoint(path.points[j]);
        let d = boundary.distance_within(m, cutoff).unwrap_or(f64::INFINITY);
        terms.push(spec.eval_at_distance(d) * (path.times[j] - path.times[i]));
        i = j;
    }
    crate::stats::pairwise_sum(&terms)
}

/// Survival weight exp(−A_V); underflows to 0 for large functionals.
pub fn fk_weight(functional: &FunctionalValue) -> f64 {
    (-functional.value).exp()
}

/// Adaptive skeleton integrating a truncated potential, after checking the
/// resolution rule for `n_steps` uniform steps.
pub fn truncated_skeleton<'a>(
    spec: &PotentialSpec,
    boundary: &'a PrefractalBoundary,
    horizon: f64,
    n_steps: usize,
) -> Result<BandSkeleton<'a>> {
    spec.check_resolution(horizon, n_steps)?;
    let cutoff = spec
        .cutoff()
        .ok_or_else(|| Error::arg("a constant potential needs no skeleton"))?;
    Ok(BandSkeleton::new(boundary, &[cutoff], horizon, n_steps))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::line_boundary;
    use crate::stochastic::{sample_path, substream};
    use proptest::prelude::*;

    fn line() -> PrefractalBoundary {
        line_boundary(10.0).unwrap()
    }

    #[test]
    fn pointwise_values() {
        let k = line();
        let s = PotentialSpec::singular(1.0);
        assert_eq!(potential_eval(&s, &k, Point2::new(0.0, 0.5)), 2.0);
        assert_eq!(potential_eval(&s, &k, Point2::new(0.0, 0.0)), f64::INFINITY);
        let t = PotentialSpec::truncated(1.0, 10.0);
        assert!((potential_eval(&t, &k, Point2::new(0.0, 0.05)) - 10.0).abs() < 1e-12);
        assert_eq!(potential_eval(&t, &k, Point2::new(0.0, 0.2)), 0.0);
        let c = PotentialSpec::constant(3.0);
        assert_eq!(potential_eval(&c, &k, Point2::new(0.0, 0.0)), 3.0);
    }

    #[test]
    fn resolution_rule() {
        let s = PotentialSpec::truncated(1.0, 10.0);
        // (1/100)^2 / 2 = 5e-5.
        assert!((s.max_step().unwrap() - 5e-5).abs() < 1e-18);
        assert_eq!(s.required_steps(1.0), 20_000);
        assert!(s.check_resolution(1.0, 20_000).is_ok());
        match s.check_resolution(1.0, 19_999) {
            Err(Error::Resolution {
                required_n_steps, ..
            }) => assert_eq!(required_n_steps, 20_000),
            other => panic!("{other:?}"),
        }
        assert!(matches!(
            PotentialSpec::singular(1.0).check_resolution(1.0, 10),
            Err(Error::UnsupportedSingularity)
        ));
    }

    #[test]
    fn constant_functional_is_exact() {
        let p = sample_path(&substream(1, &[]), Point2::ORIGIN, 0.7, 9).unwrap();
        let v = fk_functional(&p, &PotentialSpec::constant(2.5), &line()).unwrap();
        assert_eq!(v.value, 2.5 * 0.7);
        assert_eq!(v.refinement_delta, 0.0);
    }

    #[test]
    fn far_path_has_zero_functional() {
        let s = PotentialSpec::truncated(1.0, 10.0);
        let p = sample_path(&substream(2, &[]), Point2::new(0.0, 5.0), 1e-3, 20).unwrap();
        let v = fk_functional(&p, &s, &line()).unwrap();
        assert_eq!(v.value, 0.0);
    }

    #[test]
    fn coarse_path_is_rejected() {
        let s = PotentialSpec::truncated(1.0, 10.0);
        let p = sample_path(&substream(2, &[]), Point2::new(0.0, 0.01), 1.0, 100).unwrap();
        assert!(matches!(fk_functional(&p, &s, &line()), Err(Error::Resolution { .. })));
        let p = sample_path(&substream(2, &[]), Point2::new(0.0, 0.01), 1.0, 100).unwrap();
        assert!(matches!(
            fk_functional(&p, &PotentialSpec::singular(1.0), &line()),
            Err(Error::UnsupportedSingularity)
        ));
    }

    #[test]
    fn weight_values() {
        let f = |v| FunctionalValue {
            value: v,
            step: 0.0,
            refinement_delta: 0.0,
        };
        assert_eq!(fk_weight(&f(0.0)), 1.0);
        assert!((fk_weight(&f(2f64.ln())) - 0.5).abs() < 1e-15);
        assert_eq!(fk_weight(&f(1e3)), 0.0);
    }

    #[test]
    fn halving_the_step_rarely_moves_the_value() {
        // Refinement oracle: re-summing at double step changes the value by
        // less than 5% on at least 95% of paths that meet the support.
        let k = line();
        let s = PotentialSpec::truncated(1.0, 4.0);
        let horizon = 0.25;
        let n = s.required_steps(horizon);
        let (mut hit, mut stable) = (0, 0);
        for i in 0..200 {
            let p = sample_path(&substream(3, &[("p", i)]), Point2::new(0.0, 0.1), horizon, n).unwrap();
            let v = fk_functional(&p, &s, &k).unwrap();
            if v.value > 0.0 {
                hit += 1;
                stable += (v.refinement_delta < 0.05 * v.value) as usize;
            }
        }
        assert!(hit > 100);
        assert!(stable as f64 >= 0.95 * hit as f64, "{stable}/{hit}");
    }

    #[test]
    fn skeleton_matches_uniform_sum_in_mean() {
        let k = line();
        let s = PotentialSpec::truncated(1.0, 4.0);
        let horizon = 0.25;
        let n = s.required_steps(horizon);
        let sk = truncated_skeleton(&s, &k, horizon, n).unwrap();
        let x0 = Point2::new(0.0, 0.1);
        let (mut a, mut b) = (Vec::new(), Vec::new());
        for i in 0..400 {
            let mut r = substream(4, &[("sk", i)]).rng();
            let occ = sk.forward(&mut r, x0);
            a.push(FunctionalValue::from_occupation(&occ, &s, sk.fine_step()).value);
            let p = sample_path(&substream(4, &[("u", i)]), x0, horizon, n).unwrap();
            b.push(fk_functional(&p, &s, &k).unwrap().value);
        }
        let ea = crate::stats::Estimate::from_samples(&a);
        let eb = crate::stats::Estimate::from_samples(&b);
        let joint = (ea.stderr.powi(2) + eb.stderr.powi(2)).sqrt();
        assert!((ea.value - eb.value).abs() < 4.0 * joint, "{ea:?} {eb:?}");
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        #[test]
        fn functional_is_additive_and_monotone_in_c_v(seed in 0u64..1000, c in 1.1f64..4.0) {
            let k = line();
            let s = PotentialSpec::truncated(1.0, 4.0);
            let horizon = 0.02;
            let n = 2 * s.required_steps(horizon / 2.0);
            let p = sample_path(&substream(seed, &[]), Point2::new(0.0, 0.05), horizon, n).unwrap();
            let whole = fk_functional(&p, &s, &k).unwrap().value;
            let half = n / 2;
            let first = Path {
                times: p.times[..=half].to_vec(),
                points: p.points[..=half].to_vec(),
                horizon: p.times[half],
            };
            let second = Path {
                times: p.times[half..].to_vec(),
                points: p.points[half..].to_vec(),
                horizon: horizon - p.times[half],
            };
            let split = fk_functional(&first, &s, &k).unwrap().value + fk_functional(&second, &s, &k).unwrap().value;
            prop_assert!((whole - split).abs() <= 1e-12 * whole.max(1.0));
            let scaled = fk_functional(&p, &s.with_c_v(c), &k).unwrap();
            if whole > 0.0 {
                prop_assert!(scaled.value > whole);
                prop_assert!(fk_weight(&scaled) < (-whole).exp());
            }
        }
    }
}
