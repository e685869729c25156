//! Error type shared across the crate.

use thiserror::Error;

/// Errors produced by signal construction, recovery, and the experiment harness.
#[derive(Debug, Error)]
pub enum Error {
    /// A vector or operator dimension does not match its context.
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    /// Cyclic prefix length must satisfy `0 < cp_len < n`.
    #[error("invalid cyclic prefix length {cp_len} for block length {n}")]
    InvalidCp { cp_len: usize, n: usize },

    /// An index or shift fell outside its valid range.
    #[error("out of range: {0}")]
    Range(String),

    /// Operator composition was given an inconsistent block list.
    #[error("invalid operator composition: {0}")]
    Composition(String),

    /// A scene violates the cyclic-prefix delay bound or is otherwise malformed.
    #[error("invalid scene: {0}")]
    Scene(String),

    /// Numeric input was rejected (negative variance, NaN, nonpositive power, ...).
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// NBI tone list was rejected (duplicate or out-of-range bins).
    #[error("invalid tones: {0}")]
    Tones(String),

    /// Configuration file or sweep specification error.
    #[error("config error: {0}")]
    Config(String),

    /// Exhaustive support enumeration would exceed the allowed budget.
    #[error("support enumeration too large: {0}")]
    TooLarge(String),

    /// Underlying I/O failure.
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    /// A binary or text record did not match its expected format.
    #[error("malformed record: {0}")]
    Format(String),
}

pub type Result<T> = std::result::Result<T, Error>;
