//! Monte Carlo laboratory for Feynman-Kac kernels with potentials that blow up
//! near a (possibly fractal) boundary curve.
//!
//! The crate estimates heat kernels of `Δ - V` through Brownian paths and
//! bridges, measures how the killing rate near the boundary scales with a
//! truncation level, and fits the resulting exponents.

pub mod error;
pub mod estimators;
pub mod geometry;
pub mod harness;
pub mod point;
pub mod quadrature;
pub mod potential;
pub mod stats;
pub mod stochastic;

pub use error::{Error, Result};
pub use point::{Point2, Segment};
