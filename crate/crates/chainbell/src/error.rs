use thiserror::Error;

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;

/// Errors surfaced by the toolkit.
///
/// Numeric routines reject malformed inputs instead of propagating NaNs;
/// every variant names the check that failed.
#[derive(Debug, Clone, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("matrix is not Hermitian (max |M - M†| = {deviation:.3e}, tolerance {tolerance:.3e})")]
    NotHermitian { deviation: f64, tolerance: f64 },

    #[error("degenerate norm: {0}")]
    DegenerateNorm(String),

    #[error("index out of range: {0}")]
    IndexOutOfRange(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("bisection bracket does not change sign: {0}")]
    BracketFailure(String),

    #[error("unsupported: {0}")]
    Unsupported(String),
}
