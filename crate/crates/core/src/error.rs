//! Error type shared across the crate.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// Operation is not implemented for this measure kind / dimension combination.
    #[error("unsupported: {0}")]
    Unsupported(String),

    /// Invalid parameter values (negative scale, non-SPD covariance, ...).
    #[error("domain error: {0}")]
    Domain(String),

    /// A quantizer grid violates a structural requirement (wrong shape,
    /// duplicate points, non-finite entries).
    #[error("invalid quantizer: {0}")]
    InvalidQuantizer(String),

    /// Problem size exceeds a documented hard limit.
    #[error("size limit exceeded: {0}")]
    SizeLimit(String),

    /// A bound or formula does not apply to the supplied measure.
    #[error("not applicable: {0}")]
    NotApplicable(String),

    /// Malformed configuration, distribution spec or CSV input.
    #[error("config error: {0}")]
    Config(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
