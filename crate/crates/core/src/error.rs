//! Error type shared across the crate.

use thiserror::Error;

/// Errors produced by model evaluation, sampling, and data handling.
///
/// The variants are deliberately coarse: front ends map them onto distinct
/// process exit codes (configuration, data, numerical, degeneracy).
#[derive(Debug, Error)]
pub enum Error {
    /// A caller violated an operation precondition (shape mismatch, invalid
    /// argument) or a configuration invariant.
    #[error("invalid configuration: {0}")]
    Config(String),

    /// Dataset ingestion failed (malformed file, missing column, bad label).
    #[error("data error: {0}")]
    Data(String),

    /// A computation produced a non-finite value or could not be repaired
    /// (e.g. covariance jitter escalation exhausted, optimizer divergence).
    #[error("numerical error: {0}")]
    Numerical(String),

    /// All importance weights collapsed to -inf; the proposal population no
    /// longer overlaps the target.
    #[error("weight degeneracy: {0}")]
    Degeneracy(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

impl Error {
    pub fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }

    pub fn data(msg: impl Into<String>) -> Self {
        Error::Data(msg.into())
    }

    pub fn numerical(msg: impl Into<String>) -> Self {
        Error::Numerical(msg.into())
    }

    pub fn degeneracy(msg: impl Into<String>) -> Self {
        Error::Degeneracy(msg.into())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
