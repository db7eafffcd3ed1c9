use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::boundary::PrefractalBoundary;
use crate::point::Point2;

/// Points closer than this to the polyline count as lying on it.
pub const ON_BOUNDARY_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Orientation {
    /// The bounded component enclosed by a closed polygon.
    InteriorIsBounded,
    /// {y > 0}; the boundary stands for the full line y = 0.
    InteriorIsHalfplaneUpper,
    /// Everything off the boundary and outside any enclosed region.
    Exterior,
}

#[derive(Debug, Clone)]
pub struct DomainSpec {
    pub boundary: PrefractalBoundary,
    pub orientation: Orientation,
}

impl DomainSpec {
    pub fn new(boundary: PrefractalBoundary, orientation: Orientation) -> Self {
        DomainSpec {
            boundary,
            orientation,
        }
    }

    /// Distance to the boundary of the domain as seen by the domain itself:
    /// for the half-plane that is the full line y = 0, otherwise the polyline.
    pub fn boundary_distance(&self, p: Point2) -> f64 {
        match self.orientation {
            Orientation::InteriorIsHalfplaneUpper => p.y.abs(),
            _ => self.boundary.distance(p),
        }
    }

    /// Like [`boundary_distance`](Self::boundary_distance) but may stop early
    /// once the distance is known to exceed `cap`, returning `cap` then.
    pub fn boundary_distance_capped(&self, p: Point2, cap: f64) -> f64 {
        match self.orientation {
            Orientation::InteriorIsHalfplaneUpper => p.y.abs().min(cap),
            _ => self.boundary.distance_within(p, cap).unwrap_or(cap),
        }
    }
}

/// Even-odd membership test; points on the boundary are never interior.
pub fn contains_interior(domain: &DomainSpec, p: Point2) -> Result<bool> {
    let b = &domain.boundary;
    match domain.orientation {
        Orientation::InteriorIsHalfplaneUpper => Ok(p.y > ON_BOUNDARY_TOL),
        Orientation::InteriorIsBounded | Orientation::Exterior => {
            if !b.is_closed() {
                return Err(Error::UnsupportedDomain(
                    "membership needs a closed boundary or a half-plane orientation".into(),
                ));
            }
            if b.distance_within(p, ON_BOUNDARY_TOL).is_some() {
                return Ok(false);
            }
            let inside = b.ray_crossings(p) % 2 == 1;
            Ok(match domain.orientation {
                Orientation::InteriorIsBounded => inside,
                _ => !inside,
            })
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::boundary::{koch_prefractal, line_boundary, snowflake_centroid};

    #[test]
    fn triangle_membership() {
        let tri = DomainSpec::new(koch_prefractal(0).unwrap(), Orientation::InteriorIsBounded);
        assert!(contains_interior(&tri, snowflake_centroid()).unwrap());
        assert!(!contains_interior(&tri, Point2::new(100.0, 100.0)).unwrap());
        // Vertex and edge points are on the boundary.
        assert!(!contains_interior(&tri, Point2::new(0.0, 0.0)).unwrap());
        assert!(!contains_interior(&tri, Point2::new(0.5, 0.0)).unwrap());
        let ext = DomainSpec::new(koch_prefractal(0).unwrap(), Orientation::Exterior);
        assert!(contains_interior(&ext, Point2::new(100.0, 100.0)).unwrap());
        assert!(!contains_interior(&ext, Point2::new(0.5, 0.0)).unwrap());
    }

    #[test]
    fn halfplane_and_open_boundaries() {
        let hp = DomainSpec::new(line_boundary(1.0).unwrap(), Orientation::InteriorIsHalfplaneUpper);
        assert!(contains_interior(&hp, Point2::new(50.0, 0.1)).unwrap());
        assert!(!contains_interior(&hp, Point2::new(0.0, 0.0)).unwrap());
        assert!(!contains_interior(&hp, Point2::new(0.0, -0.1)).unwrap());
        let open = DomainSpec::new(line_boundary(1.0).unwrap(), Orientation::InteriorIsBounded);
        assert!(matches!(
            contains_interior(&open, Point2::ORIGIN),
            Err(Error::UnsupportedDomain(_))
        ));
    }
}
