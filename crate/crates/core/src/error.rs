use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    /// Cholesky factorization broke down. `pivot` is the smallest pivot seen.
    #[error("Gram matrix is numerically singular at row {index} (smallest pivot {pivot:e})")]
    GramSingular { index: usize, pivot: f64 },

    #[error("target has coefficients outside the top eigenspace")]
    UnsupportedTarget,

    #[error("target function has zero L2 norm")]
    ZeroTarget,

    #[error("label probability out of range: |eta(x_{index})| = {value}")]
    ProbabilityOutOfRange { index: usize, value: f64 },

    #[error("invalid regularization bracket: alpha_L = {alpha_l}, alpha_U = {alpha_u}")]
    InvalidBracket { alpha_l: f64, alpha_u: f64 },

    #[error("survival factor must be positive, got {0}")]
    DegenerateSurvival(f64),

    #[error("eigenvalue ordering violated: lambda_p = {lambda_p}, lambda_1 = {lambda_1}")]
    InvalidEigen { lambda_1: f64, lambda_p: f64 },

    #[error("symmetric eigensolver failed: {0}")]
    EigFailure(String),

    #[error("trial n={n} #{trial} ({mode}) failed: {reason}")]
    TrialFailed {
        n: usize,
        trial: usize,
        mode: String,
        reason: String,
    },

    #[error("config error: {0}")]
    Config(String),

    #[error("malformed CSV: {0}")]
    Csv(String),

    #[error("nothing to plot")]
    EmptyResult,

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
