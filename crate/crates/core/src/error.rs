use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("insufficient data: need at least {need} observations, got {got}")]
    InsufficientData { need: usize, got: usize },

    #[error("singular matrix: smallest eigenvalue {min_eig:e} below tolerance {tol:e}")]
    SingularMatrix { min_eig: f64, tol: f64 },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },

    #[error("no critical value tabulated for p={p}, n={n}, alpha={alpha}")]
    MissingTableEntry { p: usize, n: usize, alpha: f64 },

    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;
