//! Error type shared by the whole crate.

use thiserror::Error;

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// A precondition on an argument was violated.
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// A point lies outside the mesh domain. Callers that trace
    /// characteristics must clamp before locating.
    #[error("point ({x}, {y}) is outside the domain")]
    OutOfDomain { x: f64, y: f64 },

    /// Operator/vector sizes do not match.
    #[error("dimension mismatch: expected {expected}, got {found}")]
    DimensionMismatch { expected: usize, found: usize },

    /// The linear solver did not reach the requested residual.
    #[error("{method} failed after {iterations} iterations (relative residual {residual:.3e})")]
    SolverFailure {
        method: &'static str,
        iterations: usize,
        residual: f64,
    },

    /// A time step aborted; carries the 1-based step index.
    #[error("time step {step} failed: {source}")]
    StepFailed {
        step: usize,
        #[source]
        source: Box<Error>,
    },

    /// A refinement-level run in a convergence study aborted.
    #[error("refinement level n={level} failed: {source}")]
    LevelFailed {
        level: usize,
        #[source]
        source: Box<Error>,
    },

    /// Not enough usable samples for a least-squares fit.
    #[error("undefined fit: {0}")]
    UndefinedFit(String),

    /// A mesh / checkpoint / config text file could not be parsed.
    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
