//! Error type shared across the crate.
//!
//! Domain and parameter violations are kept separate from I/O and config
//! problems so the CLI can map every failure to a stable exit code and a
//! single-line message.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// A mathematical argument left its admissible range (r ≤ 0 where a
    /// logarithm is needed, λ̄ ≥ 1, t outside a window, …).
    #[error("domain: {0}")]
    Domain(String),

    /// A structural parameter is invalid (β outside (−1, 0], cfl outside
    /// (0, 0.5], too few nodes, mismatched grids, …).
    #[error("parameter: {0}")]
    Parameter(String),

    /// Configuration file or override could not be parsed or validated.
    #[error("config: {0}")]
    Config(String),

    /// Filesystem failure while reading or writing artifacts.
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

impl Error {
    pub fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub fn parameter(msg: impl Into<String>) -> Self {
        Error::Parameter(msg.into())
    }

    pub fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
