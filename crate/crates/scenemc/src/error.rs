use thiserror::Error;

/// Error taxonomy shared by the library and the command-line tool.
///
/// The CLI maps these onto exit codes: configuration, data, parameter, usage
/// and model errors exit with 2; I/O errors exit with 3.
#[derive(Debug, Error)]
pub enum Error {
    /// A distribution or likelihood parameter violates its invariants.
    #[error("parameter error: {0}")]
    Parameter(String),

    /// An operation was called outside its contract (dimension mismatch,
    /// non-enumerable address, ...).
    #[error("usage error: {0}")]
    Usage(String),

    /// A configuration file or chain configuration is invalid.
    #[error("config error: {0}")]
    Config(String),

    /// Input data is malformed or inconsistent.
    #[error("data error: {0}")]
    Data(String),

    /// A model violated an engine contract (e.g. non-finite likelihood on a
    /// prior sample).
    #[error("model error: {0}")]
    Model(String),

    /// Filesystem or image decoding failure.
    #[error("io error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<image::ImageError> for Error {
    fn from(e: image::ImageError) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Data(e.to_string())
    }
}

impl Error {
    /// Exit code for the command-line tool.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Io(_) => 3,
            _ => 2,
        }
    }
}
