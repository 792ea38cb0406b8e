//! Error type shared by every module.

use thiserror::Error;

/// Library-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// An argument lies outside the domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// The adaptive integrator could not meet the requested tolerance.
    #[error("non-convergence: {0}")]
    NonConvergence(String),

    /// Evaluation requested inside a guard band around a singular point.
    #[error("singular point: {0}")]
    Singular(String),

    /// A quadrature grid is too coarse for the requested function.
    #[error("resolution error: {0}")]
    Resolution(String),

    /// A covariance matrix is not positive definite.
    #[error("covariance not positive definite: {0}")]
    NotPositiveDefinite(String),

    /// Configuration text could not be parsed.
    #[error("parse error at line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },

    /// Configuration parsed but violated one or more invariants.
    #[error("invalid configuration: {}", .0.join("; "))]
    Validation(Vec<String>),

    /// A scenario pipeline failed; `scenario` names it.
    #[error("scenario {scenario}: {source}")]
    Scenario {
        scenario: String,
        source: Box<Error>,
    },

    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),

    #[error("serialization error: {0}")]
    Serialize(String),
}

pub(crate) fn domain(msg: impl Into<String>) -> Error {
    Error::Domain(msg.into())
}
