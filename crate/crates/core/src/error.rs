use thiserror::Error;

use crate::measure::ValidationReport;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// A parameter lies outside the mathematical domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// Malformed or inconsistent arguments.
    #[error("invalid argument: {0}")]
    Argument(String),

    /// The request is well formed but not handled by this routine.
    #[error("unsupported: {0}")]
    Unsupported(String),

    /// A linear system was numerically singular.
    #[error("singular system ({message}); condition estimate {condition:e}")]
    Singular { message: String, condition: f64 },

    /// The truncated Krein system cannot meet the requested tolerance.
    #[error(
        "truncation insufficient: tail bound {tail_bound:e} exceeds tolerance {tolerance:e}; \
         at least {required} atoms required"
    )]
    Truncation {
        required: usize,
        tail_bound: f64,
        tolerance: f64,
    },

    /// Measure fails its class constraints.
    #[error("measure violates class bounds: {0}")]
    Validation(ValidationReport),

    #[error("malformed measure document: {0}")]
    Document(#[from] serde_json::Error),
}
