//! Flat `key = value` experiment configuration.

use std::fmt::{self, Write as _};
use std::path::{Path as FsPath, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{
    koch_prefractal, line_boundary, slit_boundary, snowflake_base_third, snowflake_base_tip,
    snowflake_centroid, DomainSpec, Orientation, PrefractalBoundary, MAX_KOCH_LEVEL,
};
use crate::point::Point2;
use crate::potential::{PotentialSpec, SHELL_RATIO};
use crate::stochastic::{Ball, DEFAULT_MAX_STEPS};

macro_rules! named_enum {
    ($(#[$m:meta])* $name:ident { $($variant:ident => $text:literal),+ $(,)? }) => {
        $(#[$m])*
        #[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
        #[serde(rename_all = "snake_case")]
        pub enum $name {
            $($variant),+
        }

        impl $name {
            pub const ALL: &'static [$name] = &[$($name::$variant),+];

            pub fn name(self) -> &'static str {
                match self {
                    $($name::$variant => $text),+
                }
            }
        }

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(self.name())
            }
        }

        impl FromStr for $name {
            type Err = Error;

            fn from_str(s: &str) -> Result<Self> {
                $name::ALL
                    .iter()
                    .copied()
                    .find(|v| v.name() == s)
                    .ok_or_else(|| {
                        let valid: Vec<&str> = $name::ALL.iter().map(|v| v.name()).collect();
                        Error::Validation(format!(
                            "unknown {} '{s}'; valid: {}",
                            stringify!($name).to_lowercase(),
                            valid.join(", ")
                        ))
                    })
            }
        }
    };
}

named_enum!(Experiment {
    Geometry => "geometry",
    Occupation => "occupation",
    Pz => "pz",
    Divergence => "divergence",
    Kernel => "kernel",
    Crossing => "crossing",
    Decay => "decay",
    Harmonic => "harmonic",
    Positivity => "positivity",
    Acceptance => "acceptance",
});

named_enum!(GeometryKind {
    Line => "line",
    Koch => "koch",
    Slit => "slit",
});

named_enum!(Tier {
    Fast => "fast",
    Full => "full",
});

/// Every experiment parameter. Optional fields fall back to per-geometry
/// defaults resolved at run time (see the `resolved_*` methods).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub experiment: Experiment,
    pub geometry: GeometryKind,
    /// Snowflake level; the smallest level meeting the resolution rule when unset.
    pub level: Option<u32>,
    /// Half width of the line, or length of the slit.
    pub half_width: f64,
    pub beta: f64,
    pub c_v: f64,
    /// Replaces the boundary potential by this constant when set.
    pub constant: Option<f64>,
    /// Truncation levels A.
    pub a_list: Vec<f64>,
    pub n_paths: usize,
    /// Skeleton steps; the coarsest admissible grid when unset.
    pub n_steps: Option<usize>,
    pub t: f64,
    pub delta: f64,
    /// Shell ratio.
    pub a: f64,
    pub n_min: u32,
    pub n_max: u32,
    pub eps: f64,
    pub max_steps: usize,
    pub distances: Vec<f64>,
    pub x: Option<Point2>,
    pub y: Option<Point2>,
    pub ball_center: Option<Point2>,
    pub ball_radius: f64,
    pub orientation: Option<Orientation>,
    pub ray_origin: Option<Point2>,
    pub ray_direction: Option<Point2>,
    pub scale_lo: Option<f64>,
    pub scale_hi: Option<f64>,
    pub probe_centers: usize,
    pub probe_points: usize,
    pub mesh_levels: u32,
    pub tier: Tier,
    pub seed: u64,
    pub out: PathBuf,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            experiment: Experiment::Geometry,
            geometry: GeometryKind::Line,
            level: None,
            half_width: 20.0,
            beta: 1.0,
            c_v: 1.0,
            constant: None,
            a_list: vec![4.0, 8.0, 16.0, 32.0],
            n_paths: 1000,
            n_steps: None,
            t: 1.0,
            delta: 1.0,
            a: SHELL_RATIO,
            n_min: 1,
            n_max: 5,
            eps: 1e-5,
            max_steps: DEFAULT_MAX_STEPS,
            distances: vec![0.4, 0.2, 0.1, 0.05],
            x: None,
            y: None,
            ball_center: None,
            ball_radius: 0.3,
            orientation: None,
            ray_origin: None,
            ray_direction: None,
            scale_lo: None,
            scale_hi: None,
            probe_centers: 200,
            probe_points: 10_000,
            mesh_levels: 5,
            tier: Tier::Fast,
            seed: 1,
            out: PathBuf::from("out"),
        }
    }
}

fn invalid(msg: impl Into<String>) -> Error {
    Error::Validation(msg.into())
}

fn parse_num<T: FromStr>(key: &str, v: &str) -> Result<T> {
    v.parse()
        .map_err(|_| invalid(format!("{key}: cannot parse '{v}'")))
}

fn parse_list(key: &str, v: &str) -> Result<Vec<f64>> {
    v.split(',')
        .map(|s| s.trim())
        .filter(|s| !s.is_empty())
        .map(|s| parse_num(key, s))
        .collect()
}

fn parse_point(key: &str, v: &str) -> Result<Point2> {
    match parse_list(key, v)?.as_slice() {
        [x, y] => Ok(Point2::new(*x, *y)),
        _ => Err(invalid(format!("{key}: expected 'x,y', got '{v}'"))),
    }
}

fn parse_orientation(v: &str) -> Result<Orientation> {
    match v {
        "bounded" => Ok(Orientation::InteriorIsBounded),
        "halfplane" => Ok(Orientation::InteriorIsHalfplaneUpper),
        "exterior" => Ok(Orientation::Exterior),
        _ => Err(invalid(format!(
            "orientation: unknown '{v}'; valid: bounded, halfplane, exterior"
        ))),
    }
}

fn orientation_name(o: Orientation) -> &'static str {
    match o {
        Orientation::InteriorIsBounded => "bounded",
        Orientation::InteriorIsHalfplaneUpper => "halfplane",
        Orientation::Exterior => "exterior",
    }
}

fn join(xs: &[f64]) -> String {
    xs.iter().map(f64::to_string).collect::<Vec<_>>().join(",")
}

fn point(p: Point2) -> String {
    format!("{},{}", p.x, p.y)
}

/// Smallest snowflake level whose segments are at most γ/10.
pub fn required_level(gamma: f64) -> u32 {
    let mut level = 0;
    while 3f64.powi(-(level as i32)) > gamma / 10.0 * (1.0 + 1e-12) {
        level += 1;
    }
    level
}

impl ExperimentConfig {
    pub fn new(experiment: Experiment) -> Self {
        ExperimentConfig {
            experiment,
            ..Default::default()
        }
    }

    /// Sets one key from its text form.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let v = value.trim();
        let opt = |v: &str| v.is_empty() || v == "auto";
        match key.trim() {
            "experiment" => self.experiment = v.parse()?,
            "geometry" => self.geometry = v.parse()?,
            "level" => self.level = if opt(v) { None } else { Some(parse_num(key, v)?) },
            "half_width" => self.half_width = parse_num(key, v)?,
            "beta" => self.beta = parse_num(key, v)?,
            "c_v" => self.c_v = parse_num(key, v)?,
            "constant" => self.constant = if opt(v) { None } else { Some(parse_num(key, v)?) },
            "a_list" => self.a_list = parse_list(key, v)?,
            "n_paths" => self.n_paths = parse_num(key, v)?,
            "n_steps" => self.n_steps = if opt(v) { None } else { Some(parse_num(key, v)?) },
            "t" => self.t = parse_num(key, v)?,
            "delta" => self.delta = parse_num(key, v)?,
            "a" => self.a = parse_num(key, v)?,
            "n_min" => self.n_min = parse_num(key, v)?,
            "n_max" => self.n_max = parse_num(key, v)?,
            "eps" => self.eps = parse_num(key, v)?,
            "max_steps" => self.max_steps = parse_num(key, v)?,
            "distances" => self.distances = parse_list(key, v)?,
            "x" => self.x = if opt(v) { None } else { Some(parse_point(key, v)?) },
            "y" => self.y = if opt(v) { None } else { Some(parse_point(key, v)?) },
            "ball_center" => {
                self.ball_center = if opt(v) { None } else { Some(parse_point(key, v)?) }
            }
            "ball_radius" => self.ball_radius = parse_num(key, v)?,
            "orientation" => {
                self.orientation = if opt(v) { None } else { Some(parse_orientation(v)?) }
            }
            "ray_origin" => self.ray_origin = if opt(v) { None } else { Some(parse_point(key, v)?) },
            "ray_direction" => {
                self.ray_direction = if opt(v) { None } else { Some(parse_point(key, v)?) }
            }
            "scale_lo" => self.scale_lo = if opt(v) { None } else { Some(parse_num(key, v)?) },
            "scale_hi" => self.scale_hi = if opt(v) { None } else { Some(parse_num(key, v)?) },
            "probe_centers" => self.probe_centers = parse_num(key, v)?,
            "probe_points" => self.probe_points = parse_num(key, v)?,
            "mesh_levels" => self.mesh_levels = parse_num(key, v)?,
            "tier" => self.tier = v.parse()?,
            "seed" => self.seed = parse_num(key, v)?,
            "out" => self.out = PathBuf::from(v),
            other => return Err(invalid(format!("unknown key '{other}'"))),
        }
        Ok(())
    }

    /// Parses `key = value` lines; blank lines and `#` comments are skipped.
    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg = ExperimentConfig::default();
        for (no, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| invalid(format!("line {}: expected key = value", no + 1)))?;
            cfg.set(k, v)
                .map_err(|e| invalid(format!("line {}: {}", no + 1, strip(&e))))?;
        }
        Ok(cfg)
    }

    pub fn load(path: &FsPath) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text).map_err(|e| Error::Format {
            path: path.to_path_buf(),
            message: strip(&e),
        })
    }

    /// One `key = value` line per field; unset optional fields are omitted.
    pub fn serialize(&self) -> String {
        let mut s = String::new();
        let mut put = |k: &str, v: String| {
            let _ = writeln!(s, "{k} = {v}");
        };
        put("experiment", self.experiment.to_string());
        put("geometry", self.geometry.to_string());
        if let Some(l) = self.level {
            put("level", l.to_string());
        }
        put("half_width", self.half_width.to_string());
        put("beta", self.beta.to_string());
        put("c_v", self.c_v.to_string());
        if let Some(c) = self.constant {
            put("constant", c.to_string());
        }
        put("a_list", join(&self.a_list));
        put("n_paths", self.n_paths.to_string());
        if let Some(n) = self.n_steps {
            put("n_steps", n.to_string());
        }
        put("t", self.t.to_string());
        put("delta", self.delta.to_string());
        put("a", self.a.to_string());
        put("n_min", self.n_min.to_string());
        put("n_max", self.n_max.to_string());
        put("eps", self.eps.to_string());
        put("max_steps", self.max_steps.to_string());
        put("distances", join(&self.distances));
        for (k, p) in [
            ("x", self.x),
            ("y", self.y),
            ("ball_center", self.ball_center),
        ] {
            if let Some(p) = p {
                put(k, point(p));
            }
        }
        put("ball_radius", self.ball_radius.to_string());
        if let Some(o) = self.orientation {
            put("orientation", orientation_name(o).to_string());
        }
        for (k, p) in [("ray_origin", self.ray_origin), ("ray_direction", self.ray_direction)] {
            if let Some(p) = p {
                put(k, point(p));
            }
        }
        for (k, v) in [("scale_lo", self.scale_lo), ("scale_hi", self.scale_hi)] {
            if let Some(v) = v {
                put(k, v.to_string());
            }
        }
        put("probe_centers", self.probe_centers.to_string());
        put("probe_points", self.probe_points.to_string());
        put("mesh_levels", self.mesh_levels.to_string());
        put("tier", self.tier.to_string());
        put("seed", self.seed.to_string());
        put("out", self.out.display().to_string());
        s
    }

    pub fn potential(&self) -> PotentialSpec {
        match self.constant {
            Some(c) => PotentialSpec::constant(c),
            None => PotentialSpec::singular(self.beta).with_c_v(self.c_v),
        }
    }

    fn a_max(&self) -> f64 {
        self.a_list.iter().copied().fold(0.0, f64::max)
    }

    /// Thinnest neighborhood of the boundary the experiment resolves.
    fn finest_scale(&self) -> Option<f64> {
        use Experiment::*;
        match self.experiment {
            Occupation | Pz => Some(self.a.powi(self.n_max as i32 + 1)),
            Divergence | Crossing | Decay => Some(1.0 / self.a_max()),
            Kernel if self.constant.is_none() => Some(1.0 / self.a_max()),
            Harmonic => Some(self.distances.iter().copied().fold(f64::INFINITY, f64::min)),
            Positivity => Some(SHELL_RATIO.powi(self.mesh_levels as i32 + 1)),
            _ => None,
        }
    }

    fn needed_level(&self) -> Option<u32> {
        if self.experiment == Experiment::Geometry {
            // Boxes of the smallest scale must see one level of detail below them.
            let lo = self.resolved_scales().0;
            return Some(((1.0 / lo).log(3.0) - 1e-9).ceil().max(0.0) as u32 + 1);
        }
        self.finest_scale().map(required_level)
    }

    /// Snowflake level actually used.
    pub fn resolved_level(&self) -> Result<u32> {
        let needed = self.needed_level();
        match (self.level, needed) {
            (Some(l), Some(n)) if l < n => Err(invalid(format!(
                "koch level {l} is too coarse for the finest scale of this run; use level >= {n}"
            ))),
            (Some(l), _) => Ok(l),
            (None, Some(n)) => Ok(n),
            (None, None) => Ok(6),
        }
        .and_then(|l| {
            if l > MAX_KOCH_LEVEL {
                Err(invalid(format!("koch level {l} exceeds the cap {MAX_KOCH_LEVEL}")))
            } else {
                Ok(l)
            }
        })
    }

    /// Coarsest admissible skeleton, or the configured one after checking it.
    pub fn resolved_steps(&self) -> Result<usize> {
        use Experiment::*;
        let (horizon, max_step, what) = match self.experiment {
            Occupation | Pz => {
                let w = self.a.powi(self.n_max as i32 + 1);
                (self.delta * self.delta, w * w / 20.0, format!("shell {}", self.n_max))
            }
            Divergence => {
                let s = PotentialSpec::truncated(self.beta, self.a_max());
                (self.delta * self.delta, s.max_step().unwrap(), format!("A = {}", self.a_max()))
            }
            Kernel | Crossing | Decay if self.constant.is_none() => {
                let s = PotentialSpec::truncated(self.beta, self.a_max());
                (self.t, s.max_step().unwrap(), format!("A = {}", self.a_max()))
            }
            _ => return Ok(self.n_steps.unwrap_or(1)),
        };
        let needed = ((horizon / max_step) * (1.0 - 1e-12)).ceil().max(1.0) as usize;
        match self.n_steps {
            Some(n) if n < needed => Err(invalid(format!(
                "n_steps = {n} does not resolve {what}; use n_steps >= {needed}"
            ))),
            Some(n) => Ok(n),
            None => Ok(needed),
        }
    }

    pub fn boundary(&self) -> Result<PrefractalBoundary> {
        match self.geometry {
            GeometryKind::Line => line_boundary(self.half_width),
            GeometryKind::Slit => slit_boundary(self.half_width),
            GeometryKind::Koch => koch_prefractal(self.resolved_level()?),
        }
    }

    /// Start point: on K for occupation-type runs, off K for kernels.
    pub fn resolved_x(&self) -> Point2 {
        use Experiment::*;
        if let Some(x) = self.x {
            return x;
        }
        let on_k = matches!(self.experiment, Occupation | Pz | Divergence);
        match (self.geometry, on_k) {
            (GeometryKind::Koch, true) => snowflake_base_third(),
            (GeometryKind::Koch, false) => snowflake_centroid(),
            (GeometryKind::Slit, true) => Point2::new(-1.0, 0.0),
            (_, true) => Point2::ORIGIN,
            (GeometryKind::Line, false) if self.experiment == Positivity => Point2::new(0.0, 0.5),
            (_, false) => Point2::new(0.0, 1.0),
        }
    }

    /// Target ball: across K from the start point.
    pub fn resolved_ball(&self) -> Ball {
        let center = self.ball_center.unwrap_or(match self.geometry {
            // 1.5 side lengths beyond the base edge, the one facing the top vertex.
            GeometryKind::Koch if self.experiment == Experiment::Harmonic => {
                let (tip, n) = snowflake_base_tip();
                tip + n * 2.0
            }
            GeometryKind::Koch => Point2::new(0.5, -1.5),
            GeometryKind::Line if self.experiment == Experiment::Harmonic => Point2::new(0.0, 2.0),
            GeometryKind::Slit => Point2::new(0.0, 2.0),
            GeometryKind::Line => Point2::new(0.0, -1.0),
        });
        let radius = if self.experiment == Experiment::Harmonic && self.ball_center.is_none() {
            self.ball_radius.max(0.5)
        } else {
            self.ball_radius
        };
        Ball::new(center, radius)
    }

    pub fn resolved_y(&self) -> Point2 {
        self.y.unwrap_or(self.resolved_ball().center)
    }

    pub fn resolved_domain(&self) -> Result<DomainSpec> {
        let orientation = self.orientation.unwrap_or(match self.geometry {
            GeometryKind::Line => Orientation::InteriorIsHalfplaneUpper,
            _ => Orientation::Exterior,
        });
        Ok(DomainSpec::new(self.boundary()?, orientation))
    }

    /// Boundary point approached and direction of approach.
    pub fn resolved_ray(&self) -> (Point2, Point2) {
        let (o, d) = match self.geometry {
            GeometryKind::Line => (Point2::ORIGIN, Point2::new(0.0, 1.0)),
            GeometryKind::Slit => (Point2::ORIGIN, Point2::new(1.0, 0.0)),
            GeometryKind::Koch => snowflake_base_tip(),
        };
        (self.ray_origin.unwrap_or(o), self.ray_direction.unwrap_or(d))
    }

    pub fn resolved_scales(&self) -> (f64, f64) {
        let (lo, hi) = match self.geometry {
            GeometryKind::Koch => (3f64.powi(-7), 3f64.powi(-2)),
            _ => (3f64.powi(-5), 3f64.powi(-1)),
        };
        (self.scale_lo.unwrap_or(lo), self.scale_hi.unwrap_or(hi))
    }

    /// Checks every precondition that can be decided before sampling.
    pub fn validate(&self) -> Result<()> {
        let pos = |name: &str, v: f64| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(invalid(format!("{name} must be positive and finite, got {v}")))
            }
        };
        pos("half_width", self.half_width)?;
        pos("t", self.t)?;
        pos("delta", self.delta)?;
        pos("eps", self.eps)?;
        pos("ball_radius", self.ball_radius)?;
        pos("c_v", self.c_v)?;
        if !(self.beta > 0.0 && self.beta.is_finite()) {
            return Err(invalid(format!("beta must be positive, got {}", self.beta)));
        }
        if !(self.a > 0.0 && self.a < 1.0) {
            return Err(invalid(format!("a must lie in (0, 1), got {}", self.a)));
        }
        if self.n_min > self.n_max {
            return Err(invalid("n_min must not exceed n_max"));
        }
        if self.n_paths == 0 {
            return Err(invalid("n_paths must be at least 1"));
        }
        if self.a_list.iter().any(|a| !(*a > 0.0 && a.is_finite())) {
            return Err(invalid("a_list entries must be positive"));
        }
        use Experiment::*;
        let min_a = match self.experiment {
            Decay | Divergence => 4,
            Kernel | Crossing if self.constant.is_none() => 1,
            _ => 0,
        };
        if self.a_list.len() < min_a {
            return Err(invalid(format!(
                "{} needs at least {min_a} A values in a_list, got {}",
                self.experiment,
                self.a_list.len()
            )));
        }
        if min_a >= 4 {
            crate::estimators::check_geometric(&self.a_list, min_a, "a_list")
                .map_err(|e| invalid(strip(&e)))?;
        }
        if self.experiment == Harmonic {
            crate::estimators::check_geometric(&self.distances, 3, "distances")
                .map_err(|e| invalid(strip(&e)))?;
        }
        if self.experiment == Positivity && self.mesh_levels < 2 {
            return Err(invalid("mesh_levels must be at least 2"));
        }
        if self.experiment == Pz && self.n_paths < 1000 {
            return Err(invalid(format!(
                "pz needs n_paths >= 1000, got {}",
                self.n_paths
            )));
        }
        if self.geometry == GeometryKind::Koch {
            self.resolved_level()?;
        }
        self.resolved_steps()?;
        Ok(())
    }
}

/// Error text without the variant prefix.
pub(crate) fn strip(e: &Error) -> String {
    match e {
        Error::Validation(m) | Error::Argument(m) => m.clone(),
        other => other.to_string(),
    }
}
