use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("allocation has {got} phases, expected {expected}")]
    LengthMismatch { expected: usize, got: usize },

    #[error("thresholds are only defined for beta*gamma >= 1 (got {beta_gamma})")]
    BranchMismatch { beta_gamma: f64 },

    #[error("{0}")]
    Unsupported(String),
}

impl Error {
    pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }
}
