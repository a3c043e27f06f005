use std::path::PathBuf;

use thiserror::Error;

/// Errors raised by the benchmarking toolkit.
#[derive(Debug, Error)]
pub enum BenchError {
    /// Series lengths or matrix shapes do not line up.
    #[error("dimension error: {0}")]
    Dimension(String),

    /// Input value outside the admissible domain (negative threshold, |rho| >= 1, ...).
    #[error("domain error: {0}")]
    Domain(String),

    /// Invalid configuration (unknown key, seasonal period != k, ...).
    #[error("configuration error: {0}")]
    Config(String),

    /// A linear system was singular or too badly conditioned to solve.
    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("parse error: {0}")]
    Parse(String),
}

impl BenchError {
    pub(crate) fn dim(msg: impl Into<String>) -> Self {
        BenchError::Dimension(msg.into())
    }

    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        BenchError::Domain(msg.into())
    }

    pub(crate) fn config(msg: impl Into<String>) -> Self {
        BenchError::Config(msg.into())
    }

    pub(crate) fn numerical(msg: impl Into<String>) -> Self {
        BenchError::Numerical(msg.into())
    }

    /// True for failures of the numerics rather than of the inputs.
    pub fn is_numerical(&self) -> bool {
        matches!(self, BenchError::Numerical(_))
    }
}

pub type Result<T, E = BenchError> = std::result::Result<T, E>;
