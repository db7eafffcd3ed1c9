use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    Argument(String),

    #[error("resource limit exceeded: {0}")]
    ResourceLimit(String),

    #[error("insufficient scales: {usable} usable, at least 3 required")]
    InsufficientScales { usable: usize },

    #[error("unsupported domain: {0}")]
    UnsupportedDomain(String),

    #[error("untruncated singular potential cannot be path-integrated; set a truncation level")]
    UnsupportedSingularity,

    /// Skeleton too coarse for the integrand; carries the corrective step count.
    #[error("step {step:.3e} does not resolve {what} (needs step <= {max_step:.3e}); use n_steps >= {required_n_steps}")]
    Resolution {
        what: String,
        step: f64,
        max_step: f64,
        required_n_steps: usize,
    },

    #[error("divergent integral: {0}")]
    DivergentIntegral(String),

    #[error("unreliable run: {0}")]
    UnreliableRun(String),

    #[error("invalid configuration: {0}")]
    Validation(String),

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{}: {message}", path.display())]
    Format { path: PathBuf, message: String },
}

impl Error {
    pub(crate) fn arg(msg: impl Into<String>) -> Self {
        Error::Argument(msg.into())
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
