use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("degenerate sample: Cholesky pivot {pivot:.3e} at index {index} is below {threshold:.3e}")]
    DegenerateSample { index: usize, pivot: f64, threshold: f64 },

    #[error("insufficient sample: n = {n} observations for p = {p} variables (need n >= p + 2 and at least one degree of freedom under df rule {rule})")]
    InsufficientSample { n: usize, p: usize, rule: String },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("invalid generator spec: {0}")]
    InvalidSpec(String),

    #[error("could not make concentration matrix positive definite (min eigenvalue {min_eigenvalue:.3e} after delta = {delta})")]
    GenerationFailure { min_eigenvalue: f64, delta: f64 },

    #[error("empty input: {0}")]
    EmptyInput(&'static str),

    #[error("degenerate truth: the true graph is {0}, so the ROC curve is undefined")]
    DegenerateTruth(&'static str),

    #[error("invalid configuration:\n  {}", .0.join("\n  "))]
    InvalidConfig(Vec<String>),

    #[error("invalid model file: {0}")]
    InvalidModel(String),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
