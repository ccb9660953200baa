use thiserror::Error;

/// Errors raised by the spectral, class, propagator and engine layers.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("geometry mismatch: {0}")]
    GeometryMismatch(String),

    #[error("time grid mismatch: {0}")]
    TimeGridMismatch(String),

    #[error("axis {axis} out of range for dimension {dim}")]
    AxisOutOfRange { axis: usize, dim: usize },

    #[error("expected a spatial-only field")]
    ExpectedSpatial,

    #[error("expected a time-sampled field")]
    ExpectedTimeSampled,

    #[error("sample index {index} out of range ({len} samples)")]
    IndexOutOfRange { index: usize, len: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("{case} requires n >= {required}, got n = {got}")]
    DimensionGate {
        case: String,
        required: usize,
        got: usize,
    },

    #[error("unsolvable Poisson problem: mean mode |g(0)| = {magnitude:e} exceeds {tolerance:e} at sample {sample}")]
    PoissonMeanMode {
        sample: usize,
        magnitude: f64,
        tolerance: f64,
    },

    #[error("truncation loss {loss:e} exceeds cap {cap:e}")]
    TruncationCap { loss: f64, cap: f64 },

    #[error("divergence of initial velocity {0:e} exceeds tolerance")]
    NotDivergenceFree(f64),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error("io error: {0}")]
    Io(String),
}

impl Error {
    /// Errors caused by the caller's input documents rather than by the run.
    pub fn is_usage(&self) -> bool {
        matches!(self, Error::Config(_) | Error::Parse(_) | Error::Io(_))
    }
}

pub type Result<T> = std::result::Result<T, Error>;

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Parse(e.to_string())
    }
}

impl From<toml::de::Error> for Error {
    fn from(e: toml::de::Error) -> Self {
        Error::Parse(e.to_string())
    }
}
