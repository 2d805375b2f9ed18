use std::path::PathBuf;

use thiserror::Error;

/// Errors produced by the solver, the audit harness and the Matrix Market reader.
#[derive(Debug, Error)]
pub enum Error {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("matrix market: unsupported header token `{0}`")]
    UnsupportedField(String),

    #[error("matrix market: line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("non-finite value encountered in {0}")]
    NonFinite(&'static str),

    #[error("block is not orthonormal (deviation {deviation:.3e})")]
    NotOrthonormal { deviation: f64 },

    #[error("block is rank deficient")]
    RankDeficient,

    #[error("dimension {dim} exceeds the audit cap {cap}")]
    AuditCapExceeded { dim: usize, cap: usize },

    #[error("MINRES produced a non-finite value at iteration {iteration}")]
    MinresBreakdown { iteration: usize },

    #[error("bound not applicable: {0}")]
    BoundInapplicable(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("invalid matrix: {0}")]
    InvalidMatrix(String),
}

pub type Result<T> = std::result::Result<T, Error>;
