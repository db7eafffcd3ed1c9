use std::fmt::Write as _;
use std::path::Path as FsPath;

use crate::error::{Error, Result};
use crate::geometry::index::{Aabb, SegmentIndex};
use crate::point::{Point2, Segment};

/// Highest snowflake level accepted by [`koch_prefractal`].
pub const MAX_KOCH_LEVEL: u32 = 14;

/// Minkowski exponent of the ideal snowflake, log 4 / log 3.
pub fn koch_alpha() -> f64 {
    4f64.ln() / 3f64.ln()
}

/// Polyline approximation of a boundary set with a nearest-segment index.
#[derive(Debug, Clone)]
pub struct PrefractalBoundary {
    segments: Vec<Segment>,
    level: u32,
    nominal_alpha: f64,
    closed: bool,
    index: SegmentIndex,
    diameter: f64,
    bbox: Aabb,
}

impl PrefractalBoundary {
    pub fn from_segments(
        segments: Vec<Segment>,
        level: u32,
        nominal_alpha: f64,
        closed: bool,
    ) -> Result<Self> {
        if segments.is_empty() {
            return Err(Error::arg("boundary needs at least one segment"));
        }
        if segments
            .iter()
            .any(|s| !(s.a.x.is_finite() && s.a.y.is_finite() && s.b.x.is_finite() && s.b.y.is_finite()))
        {
            return Err(Error::arg("boundary coordinates must be finite"));
        }
        let index = SegmentIndex::build(&segments);
        let bbox = segments
            .iter()
            .fold(Aabb::empty(), |b, s| b.union(Aabb::of_segment(s)));
        let diameter = diameter_of(&segments);
        Ok(PrefractalBoundary {
            segments,
            level,
            nominal_alpha,
            closed,
            index,
            diameter,
            bbox,
        })
    }

    pub fn segments(&self) -> &[Segment] {
        &self.segments
    }

    pub fn level(&self) -> u32 {
        self.level
    }

    pub fn nominal_alpha(&self) -> f64 {
        self.nominal_alpha
    }

    pub fn is_closed(&self) -> bool {
        self.closed
    }

    pub fn diameter(&self) -> f64 {
        self.diameter
    }

    pub fn bbox(&self) -> Aabb {
        self.bbox
    }

    pub fn max_segment_length(&self) -> f64 {
        self.segments
            .iter()
            .map(Segment::length)
            .fold(0.0, f64::max)
    }

    /// Finest scale at which the polyline stands in for its ideal set.
    ///
    /// Zero for sets represented exactly (nominal exponent 1: lines, polygons
    /// used as themselves); the segment length for fractal stand-ins.
    pub fn resolution(&self) -> f64 {
        if self.nominal_alpha == 1.0 {
            0.0
        } else {
            self.max_segment_length()
        }
    }

    /// Polyline vertices (segment start points, plus the final end point when open).
    pub fn vertices(&self) -> Vec<Point2> {
        let mut v: Vec<Point2> = self.segments.iter().map(|s| s.a).collect();
        if !self.closed {
            v.push(self.segments[self.segments.len() - 1].b);
        }
        v
    }

    /// Exact Euclidean distance from `p` to the polyline.
    pub fn distance(&self, p: Point2) -> f64 {
        self.index
            .nearest_within(&self.segments, p, f64::INFINITY)
            .map(|(_, d2)| d2.sqrt())
            .unwrap_or(f64::INFINITY)
    }

    /// Distance from `p` if it does not exceed `cap`, otherwise `None`.
    #[inline]
    pub fn distance_within(&self, p: Point2, cap: f64) -> Option<f64> {
        self.index
            .nearest_within(&self.segments, p, cap * cap)
            .map(|(_, d2)| d2.sqrt())
    }

    /// Nearest point on the polyline together with its distance.
    pub fn nearest_point(&self, p: Point2) -> (Point2, f64) {
        let (i, d2) = self
            .index
            .nearest_within(&self.segments, p, f64::INFINITY)
            .expect("non-empty boundary");
        (self.segments[i].closest_point(p), d2.sqrt())
    }

    /// Reference implementation: minimum over all segments.
    pub fn distance_brute_force(&self, p: Point2) -> f64 {
        self.segments
            .iter()
            .map(|s| s.distance_sq(p))
            .fold(f64::INFINITY, f64::min)
            .sqrt()
    }

    pub(crate) fn ray_crossings(&self, p: Point2) -> usize {
        self.index.ray_crossings(&self.segments, p)
    }

    /// Serialize as CSV: the first record is `level,alpha,closed`, then one
    /// `ax,ay,bx,by` record per segment.
    pub fn to_csv(&self) -> String {
        let mut out = String::with_capacity(64 * self.segments.len() + 64);
        let _ = writeln!(out, "{},{},{}", self.level, self.nominal_alpha, self.closed);
        for s in &self.segments {
            let _ = writeln!(out, "{},{},{},{}", s.a.x, s.a.y, s.b.x, s.b.y);
        }
        out
    }

    pub fn from_csv(text: &str) -> std::result::Result<Self, String> {
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        let header = lines.next().ok_or("empty boundary file")?;
        let fields: Vec<&str> = header.split(',').map(str::trim).collect();
        if fields.len() != 3 {
            return Err(format!("header must be `level,alpha,closed`, got `{header}`"));
        }
        let level: u32 = fields[0].parse().map_err(|e| format!("level: {e}"))?;
        let alpha: f64 = fields[1].parse().map_err(|e| format!("alpha: {e}"))?;
        let closed: bool = fields[2].parse().map_err(|e| format!("closed: {e}"))?;
        let mut segments = Vec::new();
        for (lineno, line) in lines.enumerate() {
            let v: std::result::Result<Vec<f64>, _> =
                line.split(',').map(|f| f.trim().parse::<f64>()).collect();
            let v = v.map_err(|e| format!("segment {}: {e}", lineno + 1))?;
            if v.len() != 4 {
                return Err(format!("segment {}: expected 4 fields", lineno + 1));
            }
            segments.push(Segment::new(Point2::new(v[0], v[1]), Point2::new(v[2], v[3])));
        }
        PrefractalBoundary::from_segments(segments, level, alpha, closed).map_err(|e| e.to_string())
    }

    pub fn save_csv(&self, path: &FsPath) -> Result<()> {
        std::fs::write(path, self.to_csv()).map_err(|e| Error::io(path, e))
    }

    pub fn load_csv(path: &FsPath) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_csv(&text).map_err(|message| Error::Format {
            path: path.to_path_buf(),
            message,
        })
    }
}

fn diameter_of(segments: &[Segment]) -> f64 {
    let mut pts: Vec<Point2> = segments.iter().flat_map(|s| [s.a, s.b]).collect();
    let hull = convex_hull(&mut pts);
    let mut best: f64 = 0.0;
    for i in 0..hull.len() {
        for j in i + 1..hull.len() {
            best = best.max(hull[i].dist(hull[j]));
        }
    }
    best
}

/// Andrew's monotone chain.
fn convex_hull(pts: &mut [Point2]) -> Vec<Point2> {
    pts.sort_by(|a, b| a.x.total_cmp(&b.x).then(a.y.total_cmp(&b.y)));
    if pts.len() <= 2 {
        return pts.to_vec();
    }
    let mut hull: Vec<Point2> = Vec::with_capacity(pts.len());
    for pass in 0..2 {
        let start = hull.len();
        let iter: Box<dyn Iterator<Item = &Point2>> = if pass == 0 {
            Box::new(pts.iter())
        } else {
            Box::new(pts.iter().rev())
        };
        for &p in iter {
            while hull.len() >= start + 2 {
                let (a, b) = (hull[hull.len() - 2], hull[hull.len() - 1]);
                if (b - a).cross(p - a) <= 0.0 {
                    hull.pop();
                } else {
                    break;
                }
            }
            hull.push(p);
        }
        hull.pop();
    }
    hull
}

/// Closed level-`level` snowflake on the unit equilateral triangle with
/// vertices (0,0), (1,0), (1/2, sqrt(3)/2), traversed counter-clockwise.
pub fn koch_prefractal(level: u32) -> Result<PrefractalBoundary> {
    if level > MAX_KOCH_LEVEL {
        return Err(Error::ResourceLimit(format!(
            "snowflake level {level} exceeds cap {MAX_KOCH_LEVEL} (3*4^{MAX_KOCH_LEVEL} segments)"
        )));
    }
    let h = 3f64.sqrt() / 2.0;
    let mut pts = vec![
        Point2::new(0.0, 0.0),
        Point2::new(1.0, 0.0),
        Point2::new(0.5, h),
        Point2::new(0.0, 0.0),
    ];
    let outward = -std::f64::consts::FRAC_PI_3;
    for _ in 0..level {
        let mut next = Vec::with_capacity(4 * (pts.len() - 1) + 1);
        for w in pts.windows(2) {
            let (p, q) = (w[0], w[1]);
            let third = (q - p) * (1.0 / 3.0);
            let a = p + third;
            let b = a + third.rotate(outward);
            let c = p + third * 2.0;
            next.extend_from_slice(&[p, a, b, c]);
        }
        next.push(pts[pts.len() - 1]);
        pts = next;
    }
    let segments = pts.windows(2).map(|w| Segment::new(w[0], w[1])).collect();
    PrefractalBoundary::from_segments(segments, level, koch_alpha(), true)
}

/// Segment {(x, 0): |x| <= half_width} as an open one-segment polyline.
pub fn line_boundary(half_width: f64) -> Result<PrefractalBoundary> {
    if !(half_width > 0.0 && half_width.is_finite()) {
        return Err(Error::arg(format!(
            "half_width must be positive and finite, got {half_width}"
        )));
    }
    PrefractalBoundary::from_segments(
        vec![Segment::new(
            Point2::new(-half_width, 0.0),
            Point2::new(half_width, 0.0),
        )],
        0,
        1.0,
        false,
    )
}

/// Slit {(x, 0): -length <= x <= 0}, a finite stand-in for a ray ending at the origin.
pub fn slit_boundary(length: f64) -> Result<PrefractalBoundary> {
    if !(length > 0.0 && length.is_finite()) {
        return Err(Error::arg(format!("slit length must be positive, got {length}")));
    }
    PrefractalBoundary::from_segments(
        vec![Segment::new(Point2::new(-length, 0.0), Point2::ORIGIN)],
        0,
        1.0,
        false,
    )
}

/// Centroid of the base triangle of the snowflake family.
pub fn snowflake_centroid() -> Point2 {
    Point2::new(0.5, 3f64.sqrt() / 6.0)
}

/// The point at one third of the base edge: a vertex of every prefractal of
/// level >= 1 and a point of the ideal snowflake.
pub fn snowflake_base_third() -> Point2 {
    Point2::new(1.0 / 3.0, 0.0)
}

/// Tip of the outward bump on the base edge and the outward unit normal there.
pub fn snowflake_base_tip() -> (Point2, Point2) {
    (
        Point2::new(0.5, -3f64.sqrt() / 6.0),
        Point2::new(0.0, -1.0),
    )
}
