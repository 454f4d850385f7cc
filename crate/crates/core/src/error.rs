use alloc::string::String;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("invalid character set: {0}")]
    InvalidCharacterSet(String),

    #[error("invalid frequency table: {0}")]
    InvalidFrequencyTable(String),

    #[error("not a full permutation of the symbol set: {0}")]
    NotAPermutation(String),

    #[error("invalid trial: {0}")]
    InvalidTrial(String),

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("non-finite input value")]
    NonFinite,

    #[error("the session has already exited")]
    SessionExited,

    #[error("speller is paused; call resume() before the next trial")]
    SessionPaused,

    #[error("numerical failure: {0}")]
    Numerical(String),
}

impl Error {
    pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }
}
