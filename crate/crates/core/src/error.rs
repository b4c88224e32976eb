//! Crate-wide error type.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// Inputs whose shapes do not line up (matrix/vector dimensions).
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    /// Exact-enumeration operations refuse instances above the guard.
    #[error("instance too large for exact enumeration: J+K = {actual} exceeds {limit}")]
    SizeLimit { actual: usize, limit: usize },

    /// A parameter outside its documented range.
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// The regression design matrix is not full column rank.
    #[error("rank-deficient design matrix")]
    RankDeficient,

    /// A rate whose denominator is empty (e.g. OTP with no true positives).
    #[error("undefined rate: {0}")]
    UndefinedRate(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    /// Malformed delimited-matrix input, with the offending 1-based line.
    #[error("parse error at {path}:{line}: {message}")]
    Parse {
        path: String,
        line: usize,
        message: String,
    },
}

pub type Result<T> = std::result::Result<T, Error>;
