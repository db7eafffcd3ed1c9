//! Reproducible sampling of Brownian paths, bridges and walk-on-spheres.

mod density;
mod path;
pub mod rng;
mod skeleton;
mod wos;

pub use density::{radial_density, transition_density};
pub use path::{sample_bridge, sample_path, BridgePath, Path};
pub use rng::{substream, RngKey, StreamRng, GENERATOR_ID};
pub use skeleton::{BandOccupation, BandSkeleton, K_SIGMA};
pub use wos::{
    walk_on_spheres, walk_on_spheres_with, Ball, WalkOutcome, DEFAULT_EPS_FRACTION,
    DEFAULT_MAX_STEPS,
};

#[allow(unused_imports)]
pub(crate) use path::{gaussian2, sample_bridge_with, sample_path_with};
