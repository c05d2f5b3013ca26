use thiserror::Error;

/// Errors raised by the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("malformed input: {0}")]
    Malformed(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },

    #[error("infeasible input: lambda_min = {lambda_min:.6e} is below -{tol:e}")]
    Infeasible { lambda_min: f64, tol: f64 },

    #[error("invalid moment index subset {0:?}")]
    BadSubset(Vec<usize>),

    #[error("moment index {index} out of range for N = {len}")]
    IndexOutOfRange { index: usize, len: usize },

    #[error("{what} = {value} exceeds the ceiling {limit}")]
    Ceiling {
        what: &'static str,
        value: usize,
        limit: usize,
    },

    #[error("invalid parameter: {0}")]
    Param(String),

    #[error("missing gram entry ({0}, {1})")]
    MissingGram(usize, usize),

    #[error("no factorization path for monomial {0}")]
    NoFactorization(String),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
