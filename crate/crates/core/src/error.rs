use crate::hilbert::Level;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid basis specification: {0}")]
    InvalidBasis(String),

    #[error("mode index {index} out of range (basis has {n_modes} modes)")]
    ModeOutOfRange { index: usize, n_modes: usize },

    #[error("site index {index} out of range (basis has {n_sites} sites)")]
    SiteOutOfRange { index: usize, n_sites: usize },

    #[error("level {0} is not part of this basis")]
    MissingLevel(Level),

    #[error("operands are defined on different bases")]
    BasisMismatch,

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: String, reason: String },

    #[error("invalid time grid: {0}")]
    InvalidGrid(String),

    #[error(
        "norm drift {drift:.3e} at t = {time:.4} exceeds {limit:.0e}; \
         the step dt = {dt} is too coarse, try dt = {suggested}"
    )]
    NormDrift { drift: f64, time: f64, limit: f64, dt: f64, suggested: f64 },

    #[error(
        "trace drift {drift:.3e} at t = {time:.4} exceeds {limit:.0e}; \
         the step dt = {dt} is too coarse, try dt = {suggested}"
    )]
    TraceDrift { drift: f64, time: f64, limit: f64, dt: f64, suggested: f64 },

    #[error("state is not physical: {0}")]
    UnphysicalState(String),

    #[error("{path}: {message}")]
    Config { path: String, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn param(name: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::InvalidParameter { name: name.into(), reason: reason.into() }
    }

    pub(crate) fn config(path: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Config { path: path.into(), message: message.into() }
    }

    /// True for failures of the integrator itself (norm or trace drift), as
    /// opposed to malformed input.
    pub fn is_numerical(&self) -> bool {
        matches!(self, Error::NormDrift { .. } | Error::TraceDrift { .. })
    }
}
