use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("cannot derive a ray direction from a zero-length point")]
    DegenerateRay,

    #[error("azimuth resolution must be positive, got {0}")]
    InvalidResolution(f64),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("format error: {0}")]
    Format(String),

    #[error("validation error: {0}")]
    Validation(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    /// The requested attack cannot work against the LiDAR's security features.
    #[error("{attack} is not applicable to the LiDAR {lidar}: {reason}")]
    Applicability {
        attack: String,
        lidar: String,
        reason: String,
    },

    #[error("invalid object model: {0}")]
    InvalidModel(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    pub(crate) fn format(msg: impl Into<String>) -> Self {
        Error::Format(msg.into())
    }

    pub(crate) fn validation(msg: impl Into<String>) -> Self {
        Error::Validation(msg.into())
    }
}
