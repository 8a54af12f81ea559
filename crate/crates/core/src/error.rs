use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("invalid background: {0}")]
    InvalidBackground(String),

    #[error("invalid model: {0}")]
    InvalidModel(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("dimension mismatch in {context}: expected {expected}, got {got}")]
    DimensionMismatch {
        context: &'static str,
        expected: usize,
        got: usize,
    },

    #[error("factorization failed at omega = {omega} rad/s (zero pivot in column {column})")]
    Factorization { omega: f64, column: usize },

    #[error("solver failure at frequency index {frequency}, source {source_index}: {message}")]
    Solve {
        frequency: usize,
        source_index: usize,
        message: String,
    },

    #[error("degenerate level set: phi is constant ({value}), epsilon cannot be adapted")]
    DegenerateLevelSet { value: f64 },

    #[error("heaviside derivative undefined for epsilon = 0")]
    ZeroEpsilon,

    #[error("no RBF node lies within radius {radius} of ({cx}, {cz})")]
    EmptyInitialization { cx: f64, cz: f64, radius: f64 },

    #[error("optimizer aborted after {iterations} iterations: {reason}")]
    OptimizerAborted { iterations: usize, reason: String },

    #[error("cannot scale noise: data cube is identically zero")]
    ZeroData,

    #[error("undefined ratio: {0} has zero denominator")]
    ZeroDenominator(&'static str),

    #[error("format error: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
