use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("point has norm {norm} but must lie strictly inside the unit ball")]
    OutsideBall { norm: f64 },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },

    #[error("unsupported dimension n = {0} (only 1 and 2 are supported here)")]
    UnsupportedDimension(usize),

    #[error("weight parameter lambda = {lambda} must exceed n = {n}")]
    InvalidWeight { lambda: f64, n: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("non-finite integrand value at node {index} ({location})")]
    NonFinite { index: usize, location: String },

    #[error("doubling test did not converge below {tol:e} (last change {change:e}); use the oscillatory path")]
    NoConvergence { tol: f64, change: f64 },

    #[error("oscillatory evaluations disagree: {first} vs {second}")]
    OscillatoryDisagreement { first: String, second: String },

    #[error("symbol '{0}' is oscillatory and not radial; no reliable rule exists")]
    OscillatoryNotRadial(String),

    #[error("inner truncation M = {m} is smaller than N = {n}")]
    Truncation { n: usize, m: usize },

    #[error("iteration cap reached in {0}")]
    IterationCap(&'static str),

    #[error("unknown symbol id '{0}'")]
    UnknownSymbol(String),

    #[error("rule exactness {have} is below the required {need}")]
    RuleTooCoarse { have: usize, need: usize },

    #[error("configuration: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
