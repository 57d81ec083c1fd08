use std::path::PathBuf;

use thiserror::Error;

/// Errors shared by every module in the crate.
#[derive(Debug, Error)]
pub enum Error {
    /// Two operands disagree on frame count, channel count, or pixel dimensions.
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    /// A mask payload violates its encoding contract.
    #[error("malformed mask: {0}")]
    MalformedMask(String),

    /// A parameter is outside its documented domain.
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// A spatial transform cannot produce the requested output size.
    #[error("geometry error: {0}")]
    Geometry(String),

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{}: invalid JSON: {source}", path.display())]
    Json {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },

    /// A data error tied to a specific input file.
    #[error("{}: {message}", path.display())]
    File { path: PathBuf, message: String },
}

impl Error {
    /// Attaches file context to an error raised while processing `path`.
    pub fn in_file(self, path: impl Into<PathBuf>) -> Error {
        match self {
            Error::Io { .. } | Error::Json { .. } | Error::File { .. } => self,
            other => Error::File {
                path: path.into(),
                message: other.to_string(),
            },
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
