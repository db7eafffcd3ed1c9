//! Γ_t(r) = ∫₀ᵗ p_s(r) ds for the heat kernel of Δ in d dimensions.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::quadrature::integrate;

const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

/// Exponential integral E1(x) for x > 0.
pub fn exp_integral_e1(x: f64) -> f64 {
    if x <= 0.0 {
        return f64::INFINITY;
    }
    if x <= 1.0 {
        let mut sum = 0.0;
        let mut term = 1.0;
        for k in 1..200 {
            term *= -x / k as f64;
            let add = -term / k as f64;
            sum += add;
            if add.abs() < 1e-17 * sum.abs() {
                break;
            }
        }
        -EULER_GAMMA - x.ln() + sum
    } else {
        // Modified Lentz evaluation of the continued fraction.
        let tiny = 1e-300;
        let mut b = x + 1.0;
        let mut c = 1.0 / tiny;
        let mut d = 1.0 / b;
        let mut h = d;
        for i in 1..500 {
            let an = -((i * i) as f64);
            b += 2.0;
            d = 1.0 / (an * d + b);
            c = b + an / c;
            let del = c * d;
            h *= del;
            if (del - 1.0).abs() < 1e-16 {
                break;
            }
        }
        h * (-x).exp()
    }
}

/// Closed form for d = 2: E1(r²/4t) / 4π.
#[inline]
pub(crate) fn gamma2(r: f64, t: f64) -> f64 {
    exp_integral_e1(r * r / (4.0 * t)) / (4.0 * PI)
}

/// ∫₀ᵗ (4πs)^{-d/2} exp(−r²/4s) ds by adaptive quadrature in log-time.
pub fn gamma_t(r: f64, t: f64, d: u32) -> Result<f64> {
    if d < 2 {
        return Err(Error::arg(format!("dimension must be at least 2, got {d}")));
    }
    if !(t > 0.0 && t.is_finite()) {
        return Err(Error::arg(format!("t must be positive, got {t}")));
    }
    if r == 0.0 {
        return Err(Error::DivergentIntegral(
            "the time-integrated kernel is infinite at r = 0".into(),
        ));
    }
    if !(r > 0.0 && r.is_finite()) {
        return Err(Error::arg(format!("r must be positive, got {r}")));
    }
    let half_d = d as f64 / 2.0;
    let q = r * r / 4.0;
    // With s = e^v the integrand is s·p_s, smooth in v.
    let f = |v: f64| {
        let s = v.exp();
        s * (4.0 * PI * s).powf(-half_d) * (-q / s).exp()
    };
    let v_end = t.ln();
    // exp(−q/s) underflows below s = q/745.
    let v_start = (q / 745.0).ln();
    if v_end <= v_start {
        return Ok(0.0);
    }
    // The integrand switches on around s = q; split there so both pieces are smooth.
    let v_mid = q.ln().clamp(v_start, v_end);
    let lower = integrate(f, v_start, v_mid, 1e-12, 0.0);
    let upper = integrate(f, v_mid, v_end, 1e-12, 0.0);
    Ok(lower + upper)
}

#[cfg(test)]
mod tests {
    use super::*;
    use statrs::function::erf::erfc;

    #[test]
    fn e1_reference_values() {
        let cases = [
            (0.01, 4.037_929_576_538_114),
            (0.1, 1.822_923_958_419_390_7),
            (1.0, 0.219_383_934_395_520_3),
            (2.0, 0.048_900_510_708_061_12),
            (10.0, 4.156_968_929_685_324e-6),
        ];
        for (x, want) in cases {
            let got = exp_integral_e1(x);
            assert!((got - want).abs() < 1e-13 * want, "E1({x}) = {got}, want {want}");
        }
    }

    #[test]
    fn two_dimensional_closed_form() {
        for &(r, t) in &[(0.01, 1.0), (0.3, 1.0), (1.0, 1.0), (2.0, 0.5), (5.0, 1.0), (0.2, 100.0)] {
            let got = gamma_t(r, t, 2).unwrap();
            let want = gamma2(r, t);
            assert!((got - want).abs() < 1e-8 * want, "r {r} t {t}: {got} vs {want}");
        }
    }

    #[test]
    fn three_dimensional_closed_form() {
        for &(r, t) in &[(0.1, 1.0), (1.0, 1.0), (1.0, 0.1), (3.0, 2.0), (1.0, 1e6)] {
            let got = gamma_t(r, t, 3).unwrap();
            let want = erfc(r / (2.0 * t.sqrt())) / (4.0 * PI * r);
            assert!((got - want).abs() < 1e-8 * want, "r {r} t {t}: {got} vs {want}");
        }
    }

    #[test]
    fn newtonian_limit_in_three_dimensions() {
        let v = gamma_t(1.0, 1e6, 3).unwrap();
        assert!((v - 1.0 / (4.0 * PI)).abs() < 1e-3);
        assert!((v - 0.0795775).abs() < 1e-3);
    }

    #[test]
    fn logarithmic_growth_in_two_dimensions() {
        let a = gamma_t(0.01, 1.0, 2).unwrap();
        let b = gamma_t(0.001, 1.0, 2).unwrap();
        let step = (b - a) * 4.0 * PI;
        // Γ ≈ (ln(4t/r²) − γ_E)/4π, so one decade in r adds 2 ln 10 / 4π.
        assert!((step / (2.0 * 10f64.ln()) - 1.0).abs() < 0.1, "{step}");
    }

    #[test]
    fn three_dimensional_two_sided_gaussian_bounds() {
        // Γ_t(r) r^{d-2} lies between C' e^{-c' r²/t} and C e^{-c r²/t}.
        let t: f64 = 1.0;
        let mut lo = f64::INFINITY;
        let mut hi: f64 = 0.0;
        for i in 0..=40 {
            let x = 0.1 * 100f64.powf(i as f64 / 40.0);
            let r = x * t.sqrt();
            let g = gamma_t(r, t, 3).unwrap() * r;
            lo = lo.min(g / (-(r * r) / t).exp());
            hi = hi.max(g / (-(r * r) / (8.0 * t)).exp());
        }
        assert!(lo > 0.0 && hi.is_finite() && hi < 1.0, "{lo} {hi}");
    }

    #[test]
    fn errors() {
        assert!(matches!(gamma_t(0.0, 1.0, 2), Err(Error::DivergentIntegral(_))));
        assert!(gamma_t(1.0, 0.0, 2).is_err());
        assert!(gamma_t(1.0, 1.0, 1).is_err());
    }

    #[test]
    fn monotone_in_t_and_r() {
        let mut prev = 0.0;
        for t in [0.1, 1.0, 10.0, 100.0, 1e4] {
            let g = gamma_t(0.5, t, 2).unwrap();
            assert!(g > prev);
            prev = g;
        }
        // d = 2 keeps growing, d = 3 saturates.
        assert!(gamma_t(0.5, 1e8, 2).unwrap() > gamma_t(0.5, 1e4, 2).unwrap() + 0.5);
        let g3 = |t| gamma_t(0.5, t, 3).unwrap();
        assert!(g3(1e8) - g3(1e6) < 1e-3);
        let mut prev = f64::INFINITY;
        for r in [0.01, 0.1, 0.5, 1.0, 3.0] {
            let g = gamma_t(r, 1.0, 2).unwrap();
            assert!(g < prev);
            prev = g;
        }
    }
}
