use thiserror::Error;

#[derive(Debug, Error)]
pub enum RtError {
    #[error("invalid stream configuration: {0}")]
    Config(String),
    #[error("audio devices are not supported in this build (endpoint {0:?}); use a file path")]
    DeviceUnsupported(String),
    #[error(transparent)]
    Core(#[from] angus_core::Error),
    #[error(transparent)]
    Batch(#[from] angus_batch::BatchError),
    #[error("{0}")]
    Io(#[from] std::io::Error),
    #[error("output: {0}")]
    Output(#[from] hound::Error),
    #[error("audio thread panicked")]
    AudioThread,
}

pub type Result<T> = std::result::Result<T, RtError>;
