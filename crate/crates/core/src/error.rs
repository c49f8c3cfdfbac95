use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Failures raised by the numerical engines.
///
/// Payloads are widened to `f64` so the error type does not depend on the
/// scalar the computation ran in.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("matrix entry at ({row}, {col}) is not finite")]
    NonFinite { row: usize, col: usize },

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("matrix is not Hermitian: |h[{row}][{col}] - conj(h[{col}][{row}])| = {deviation:e}")]
    NotHermitian {
        row: usize,
        col: usize,
        deviation: f64,
    },

    #[error("Jacobi eigensolver did not converge after {sweeps} sweeps (off-diagonal residual {residual:e})")]
    NoConvergence { sweeps: usize, residual: f64 },

    #[error("matrix is singular to tolerance (condition estimate {condition:e}, cap {cap:e})")]
    Singular { condition: f64, cap: f64 },

    #[error("P(t) is singular at t = {t} (condition estimate {condition:e})")]
    SingularTransition { t: f64, condition: f64 },

    #[error("invalid model: {0}")]
    InvalidModel(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("|A(t)| = {value:e} at t = {t} is too small to take a logarithm")]
    LogUnderflow { t: f64, value: f64 },

    #[error("config error: {0}")]
    Config(String),
}
