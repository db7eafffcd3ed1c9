//! Boundary sets, distance and membership queries, and regularity probes.

mod boundary;
mod dimension;
mod domain;
pub(crate) mod index;

pub use boundary::{
    koch_alpha, koch_prefractal, line_boundary, slit_boundary, snowflake_base_third,
    snowflake_base_tip, snowflake_centroid, PrefractalBoundary, MAX_KOCH_LEVEL,
};
pub use dimension::{
    box_count, minkowski_fit, regularity_probe, regularity_probe_with, RegularityReport,
    AMBIENT_DIM, DEFAULT_PROBE_POINTS,
};
pub use domain::{contains_interior, DomainSpec, Orientation, ON_BOUNDARY_TOL};
pub use index::Aabb;

use crate::point::Point2;

/// Exact Euclidean distance from `point` to the boundary polyline.
pub fn distance_to_boundary(boundary: &PrefractalBoundary, point: Point2) -> f64 {
    boundary.distance(point)
}

/// 1 iff a^{n+1} < d_K(point) <= a^n.
pub fn shell_indicator(boundary: &PrefractalBoundary, point: Point2, a: f64, n: u32) -> u8 {
    shell_contains(boundary.distance(point), a, n) as u8
}

pub(crate) fn shell_contains(d: f64, a: f64, n: u32) -> bool {
    let outer = a.powi(n as i32);
    d > outer * a && d <= outer
}
