use thiserror::Error;

/// Errors produced by the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("non-finite value {value} at node {node}")]
    NonFinite { node: usize, value: f64 },

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("inadmissible exponent pair ({p}, {q}) in dimension {n}: n/p + 1/q = {sum} > 1")]
    Inadmissible {
        p: String,
        q: String,
        n: usize,
        sum: String,
    },

    #[error("invalid exponent `{0}`: expected a number >= 1, a fraction such as 3/2, or `inf`")]
    InvalidExponent(String),

    #[error("nonpositive weight {value} at node {node} of the restriction")]
    NonpositiveWeight { node: usize, value: f64 },

    #[error("unknown coefficient family `{0}`")]
    UnknownFamily(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("singular time-step matrix at level {level}")]
    SingularMatrix { level: usize },

    #[error("iterative solver stalled at level {level}: residual {residual:e} after {iterations} iterations")]
    NoConvergence {
        level: usize,
        residual: f64,
        iterations: usize,
    },

    #[error("solver precondition violated: {0}")]
    Precondition(String),

    #[error("u = {value:e} > 0 at parabolic boundary node {node}")]
    PositiveOnBoundary { node: usize, value: f64 },

    #[error("grid has {nodes} nodes, the brute-force oracle accepts at most {limit}")]
    OracleTooLarge { nodes: usize, limit: usize },

    #[error("embedding check needs finite p < q, got p = {p}, q = {q}")]
    EmbeddingOrder { p: String, q: String },

    #[error("negative radial source {value} at r = {r}")]
    NegativeSource { r: f64, value: f64 },

    #[error("radial ODE step collapse at r = {r}: profile is no longer finite")]
    StepCollapse { r: f64 },

    #[error("radius mismatch: {0}")]
    RadiusMismatch(String),

    #[error("singular drift exponent alpha = {0} outside (0, 2]")]
    AlphaOutOfRange(f64),

    #[error("config error in `{key}`: {message}")]
    Config { key: String, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn config(key: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Config {
            key: key.into(),
            message: message.into(),
        }
    }
}
