use std::io;
use std::path::PathBuf;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: io::Error },
    #[error("line {0}: malformed record: {1}")]
    MalformedRecord(usize, String),
    #[error("duplicate API record `{0}`")]
    DuplicateApi(String),
    #[error("bad file format: {0}")]
    Format(String),
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Core(#[from] mme_core::Error),
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Short machine-readable tag used on standard error.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Io { .. } => "io",
            Error::MalformedRecord(..) => "malformed_record",
            Error::DuplicateApi(_) => "duplicate_api",
            Error::Format(_) => "format",
            Error::Usage(_) => "usage",
            Error::Core(_) => "data",
        }
    }
}

impl From<io::Error> for Error {
    fn from(e: io::Error) -> Self {
        Error::io("<stream>", e)
    }
}
