//! Crate-wide error type.

use thiserror::Error;

/// Result alias used throughout the crate.
pub type Result<T> = std::result::Result<T, Error>;

/// Errors surfaced by estimation, inference, and runtime code.
#[derive(Debug, Error)]
pub enum Error {
    /// Operands have incompatible or invalid dimensions.
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    /// A matrix or vector contains NaN or infinite entries.
    #[error("non-finite value at {context}")]
    NonFinite { context: String },

    /// A configuration or specification field is out of range.
    #[error("invalid config: {0}")]
    InvalidConfig(String),

    /// Cholesky factorization hit a non-positive pivot.
    #[error("matrix is not positive definite (pivot {pivot:.3e} at index {index})")]
    NotPositiveDefinite { index: usize, pivot: f64 },

    /// Too few observations for the requested operation.
    #[error("sample size {n} below required minimum {min} for {context}")]
    SampleSize {
        n: usize,
        min: usize,
        context: String,
    },

    /// Sample count is not divisible by the worker count.
    #[error("{n_total} rows cannot be split evenly across {m} workers (enable truncation to drop the remainder)")]
    IndivisibleSamples { n_total: usize, m: usize },

    /// A variance estimate came out exactly zero; the test statistic is undefined.
    #[error("zero variance estimate for pair ({j}, {k}) on worker {worker_id}")]
    ZeroVariance { j: usize, k: usize, worker_id: u16 },

    /// The column program failed to converge or verify feasibility.
    #[error("solver failure on column {column}: {reason} (residual {residual:.3e} after {iterations} iterations)")]
    SolverFailure {
        column: usize,
        reason: String,
        residual: f64,
        iterations: usize,
    },

    /// Several column programs failed; columns listed in order.
    #[error("solver failed on columns {columns:?}: {first}")]
    SolverColumns {
        columns: Vec<usize>,
        first: Box<Error>,
    },

    /// A worker/master protocol rule was violated.
    #[error("protocol violation: {0}")]
    Protocol(String),

    /// A worker pipeline failed; wraps the underlying error.
    #[error("worker {worker_id} failed: {source}")]
    Worker {
        worker_id: u16,
        #[source]
        source: Box<Error>,
    },

    /// Wire-format decode failure.
    #[error(transparent)]
    Codec(#[from] crate::runtime::codec::CodecError),

    /// Transport-level I/O failure.
    #[error("transport error: {0}")]
    Transport(String),

    /// Filesystem or serialization failure in the CLI layer.
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    /// JSON parse or encode failure.
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}
