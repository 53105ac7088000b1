//! Error type shared by every module of the crate.

use thiserror::Error;

/// Failures surfaced by solvers, generators, models and training loops.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    /// Cholesky factorization met a non-positive pivot.
    #[error("Cholesky decomposition failed at pivot {index} (value {value:e})")]
    Decomposition { index: usize, value: f64 },

    #[error("non-finite value: {0}")]
    NonFinite(String),

    /// The direction used to split a gradient has zero length.
    #[error("degenerate complexity direction")]
    DegenerateDirection,

    #[error("non-finite gradient at step {step}")]
    NonFiniteGradient { step: usize },

    #[error("run aborted at step {step}: loss {loss:e} exceeded threshold")]
    Diverged { step: usize, loss: f64 },

    #[error("io error on {path}: {message}")]
    Io { path: String, message: String },

    #[error("parse error at row {row}, column {col}: {message}")]
    Parse { row: usize, col: usize, message: String },

    #[error("missing column `{0}`")]
    MissingColumn(String),
}

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;
