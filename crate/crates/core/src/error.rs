//! Error taxonomy shared by the library.
//!
//! Variants separate the failure classes that batch tooling treats
//! differently: malformed containers ([`CoreError::Format`]) and structural
//! damage ([`CoreError::Corrupt`]) point at the file, domain violations
//! ([`CoreError::Validation`], [`CoreError::Argument`]) point at the caller,
//! and [`CoreError::Degenerate`] reports numerical situations where no
//! meaningful result exists (all-zero spectra, non-positive-definite inputs
//! beyond tolerance). Per-pixel degeneracies inside raster operations do
//! *not* raise errors — they produce NaN sentinels plus counters so one bad
//! pixel cannot abort a whole-raster job.

use thiserror::Error;

/// Library-wide error type.
#[derive(Debug, Error)]
pub enum CoreError {
    /// File signature or version is not one of ours.
    #[error("unrecognized format: {0}")]
    Format(String),

    /// File carries our signature but its structure is damaged
    /// (impossible dimensions, truncated payload, trailing bytes).
    #[error("corrupt file: {0}")]
    Corrupt(String),

    /// Data violates a documented invariant (non-finite samples,
    /// non-PSD covariance, overlapping scene strips, ...).
    #[error("invalid data: {0}")]
    Validation(String),

    /// A parameter is outside its documented domain.
    #[error("invalid argument: {0}")]
    Argument(String),

    /// Numerical degeneracy that prevents producing any result.
    #[error("numerical degeneracy: {0}")]
    Degenerate(String),

    /// Underlying I/O failure.
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    /// JSON (de)serialization failure; retains serde's line/column info.
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

/// Library-wide result alias.
pub type Result<T> = std::result::Result<T, CoreError>;
