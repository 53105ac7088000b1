//! Errors of the command-line runner.

use std::fmt;
use std::path::PathBuf;
use thiserror::Error;

/// Where a configuration value came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Origin {
    /// One-based line of the config file.
    Line(usize),
    /// A command-line flag.
    Flag,
    /// The configuration as a whole.
    Resolved,
}

impl fmt::Display for Origin {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Origin::Line(n) => write!(f, "line {n}"),
            Origin::Flag => f.write_str("command line"),
            Origin::Resolved => f.write_str("config"),
        }
    }
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{origin}: {message}")]
    Config { origin: Origin, message: String },

    #[error(transparent)]
    Core(#[from] xreg_core::Error),

    #[error("io error on {}: {source}", path.display())]
    Io { path: PathBuf, source: std::io::Error },

    #[error("{}: malformed summary: {message}", path.display())]
    Summary { path: PathBuf, message: String },

    #[error("no run summaries found in {}", .0.display())]
    Empty(PathBuf),

    #[error("summaries come from different configs:\n{0}")]
    MixedConfigs(String),

    #[error("XREG_WORKERS must be a positive integer, got `{0}`")]
    Workers(String),

    #[error("worker pool: {0}")]
    Pool(String),
}

impl CliError {
    pub fn config(origin: Origin, message: impl Into<String>) -> Self {
        CliError::Config { origin, message: message.into() }
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        CliError::Io { path: path.into(), source }
    }
}

pub type Result<T> = std::result::Result<T, CliError>;
