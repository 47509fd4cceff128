use alloc::string::String;

/// Failures reported by the numerical core.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("matrix dimensions must be at least 1x1")]
    EmptyDimension,
    #[error("dimension overflow in {op}")]
    DimensionOverflow { op: &'static str },
    #[error("dimension mismatch in {op}: {detail}")]
    DimensionMismatch { op: &'static str, detail: String },
    #[error("non-finite entries in {op}")]
    NonFinite { op: &'static str },
    #[error("zero matrix where a nonzero one is required ({op})")]
    ZeroMatrix { op: &'static str },
    #[error("formula needs {needed} history entries, got {got}")]
    InsufficientHistory { needed: usize, got: usize },
    #[error("no convergent formula found; best extraneous root modulus {best_modulus:.6}")]
    NoConvergentFormula { best_modulus: f64 },
    #[error("derivative estimate error underflowed below 1e-15 at tau = {tau:e}; shrink the tau range")]
    ErrorUnderflow { tau: f64 },
    #[error("residual diverged to {residual:e} at step {step} (t = {t})")]
    Diverged { step: usize, t: f64, residual: f64 },
    #[error("flow evaluated at t = {t} outside its interval")]
    TimeOutOfRange { t: f64 },
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

pub type Result<T, E = Error> = core::result::Result<T, E>;
