use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("index {index} out of range (size {size})")]
    IndexOutOfRange { index: usize, size: usize },

    #[error("invalid parameter `{field}`: {reason}")]
    InvalidParameter { field: &'static str, reason: String },

    #[error("candidate set of bit {bit} has {size} checks, need at least {needed}")]
    CandidateSetTooSmall { bit: usize, size: usize, needed: usize },

    #[error("enumeration of {count} items exceeds cap {cap}; {hint}")]
    CapExceeded { count: u128, cap: u128, hint: &'static str },

    #[error("initial gap vectors are not ordered under any cyclic shift")]
    OrderingViolated,

    #[error("missing provenance: {0}")]
    MissingProvenance(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn invalid(field: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            field,
            reason: reason.into(),
        }
    }
}
