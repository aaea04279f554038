//! Crate-wide error type.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("empty series: {0}")]
    EmptySeries(String),

    #[error("misaligned series: {0}")]
    Misaligned(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("singular design matrix: {0}")]
    SingularDesign(String),

    #[error("model did not produce a usable fit: {0}")]
    UnusableFit(String),

    #[error("column mismatch: {0}")]
    ColumnMismatch(String),

    #[error("{file}:{line}: {message}")]
    Parse {
        file: String,
        line: u64,
        message: String,
    },

    #[error("{file}: {message}")]
    BadInput { file: String, message: String },

    #[error("region {region}: {message}")]
    Region { region: String, message: String },

    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub fn parse(file: &str, line: u64, message: impl Into<String>) -> Self {
        Error::Parse {
            file: file.to_string(),
            line,
            message: message.into(),
        }
    }

    pub fn bad_input(file: &str, message: impl Into<String>) -> Self {
        Error::BadInput {
            file: file.to_string(),
            message: message.into(),
        }
    }

    pub fn region(region: &str, message: impl Into<String>) -> Self {
        Error::Region {
            region: region.to_string(),
            message: message.into(),
        }
    }

    pub fn io(path: &std::path::Path, source: std::io::Error) -> Self {
        Error::Io {
            path: path.display().to_string(),
            source,
        }
    }
}
