//! Error type shared by every module.

use thiserror::Error;

/// Convenience alias used throughout the crate.
pub type Result<T> = std::result::Result<T, Error>;

/// Failures reported by the library.
#[derive(Debug, Error)]
pub enum Error {
    /// An argument lies outside the validity window of an operation.
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// Two profiles that must share a grid do not.
    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    /// The density carries too much mass near the outer edge of the grid.
    #[error("grid too small: {fraction:.3e} of the particle number lies in the outer decade (limit {limit:.1e})")]
    GridTooSmall { fraction: f64, limit: f64 },

    /// An iterative solver hit its iteration cap.
    #[error("no convergence after {iterations} iterations: {detail}")]
    NonConvergence { iterations: usize, detail: String },

    /// The bound optimizer did not reach the requested tolerance.
    #[error("optimizer failure: {0}")]
    OptimizerFailure(String),

    /// No remainder constant reproduces the potential at the matching radius.
    #[error("boundary match failure: {0}")]
    BoundaryMatchFailure(String),

    /// Reading or writing an artifact failed.
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    /// A CSV or sidecar file is malformed.
    #[error("parse error: {0}")]
    Parse(String),
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Parse(e.to_string())
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Parse(e.to_string())
    }
}

/// Returns `InvalidParameter` with `msg` unless `cond` holds.
pub(crate) fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<()> {
    if cond {
        Ok(())
    } else {
        Err(Error::InvalidParameter(msg()))
    }
}
