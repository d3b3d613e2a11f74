use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// Error type for every fallible operation in the crate.
#[derive(Error, Debug)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("lengthscale must be positive, got {0}")]
    NonPositiveLengthscale(f64),

    #[error("kernel matrix singular at lengthscale {lengthscale} even with jitter up to {max_jitter}")]
    SingularKernel { lengthscale: f64, max_jitter: f64 },

    #[error("empty training set")]
    EmptyTrainingSet,

    #[error("direction file line {line}: {msg}")]
    DirectionParse { line: usize, msg: String },

    #[error("direction file line {line}: {msg}")]
    DirectionValidation { line: usize, msg: String },

    #[error("sobol dimension {requested} unsupported: table covers dimensions up to {max}")]
    SobolDimension { requested: usize, max: usize },

    #[error("sobol sequence exhausted: index past 2^32 - 1")]
    SobolIndexOverflow,

    #[error("candidate pool exhausted ({consumed} of {size} points consumed); enlarge M")]
    PoolExhausted { size: usize, consumed: usize },

    #[error("score is not finite at point {point:?}")]
    NonFiniteScore { point: Vec<f64> },

    #[error("function `{function}` returned a non-finite value at {point:?}")]
    NonFiniteValue { function: String, point: Vec<f64> },

    #[error("point {point:?} lies outside the unit hypercube")]
    OutOfDomain { point: Vec<f64> },

    #[error("unknown function `{name}`; known: {known}")]
    UnknownFunction { name: String, known: String },

    #[error("unknown policy `{name}`; known: {known}")]
    UnknownPolicy { name: String, known: String },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}
