use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("compound channel has no constituents")]
    EmptyCompound,

    #[error("channel family mismatch: {0}")]
    Family(String),

    #[error("invalid Kraus set: {0}")]
    Kraus(String),

    #[error("not found: {0}")]
    NotFound(String),

    #[error("graph too large for exhaustive search: {nodes} nodes (limit {limit})")]
    Size { nodes: usize, limit: usize },

    #[error("target {target} is not attainable: {reason}")]
    NotAttainable { target: f64, reason: String },

    #[error("bounding function is not monotone on [{lo}, {hi}]")]
    Monotonicity { lo: f64, hi: f64 },

    #[error("invalid network: {}", .0.join("; "))]
    Invalid(Vec<String>),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn domain(msg: impl Into<String>) -> Error {
    Error::Domain(msg.into())
}
