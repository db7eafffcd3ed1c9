use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::point::Point2;

/// Heat kernel of the generator Δ at distance `r`: (4πt)^{-d/2} e^{-r²/4t}.
pub fn radial_density(r: f64, t: f64, d: u32) -> Result<f64> {
    if !(t > 0.0) {
        return Err(Error::arg(format!("time must be positive, got {t}")));
    }
    if d == 0 {
        return Err(Error::arg("dimension must be at least 1"));
    }
    Ok((4.0 * PI * t).powf(-(d as f64) / 2.0) * (-r * r / (4.0 * t)).exp())
}

/// Planar transition density p_t(x, y) of Brownian motion with variance 2t per coordinate.
pub fn transition_density(x: Point2, y: Point2, t: f64) -> Result<f64> {
    if !(t > 0.0) {
        return Err(Error::arg(format!("time must be positive, got {t}")));
    }
    Ok((-(x - y).norm_sq() / (4.0 * t)).exp() / (4.0 * PI * t))
}
