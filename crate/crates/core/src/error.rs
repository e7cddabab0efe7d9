use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("insufficient periodicity: {0}")]
    InsufficientPeriodicity(String),

    #[error("insufficient data: need at least {needed} pulses, got {got}")]
    InsufficientData { needed: usize, got: usize },

    #[error("pulse model does not match source: model has {model} pulses, source has {source_pulses}")]
    ModelMismatch { model: usize, source_pulses: usize },
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }
}
