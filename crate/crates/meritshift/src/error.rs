use std::fmt;
use std::path::PathBuf;

use thiserror::Error;

/// Process exit codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExitStatus {
    Ok = 0,
    Usage = 1,
    Data = 2,
    Numerical = 3,
}

/// Where in an input file a problem was found. Rows are 1-based line
/// numbers, so the header is row 1.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Location {
    pub file: PathBuf,
    pub row: u64,
}

impl fmt::Display for Location {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}, row {}", self.file.display(), self.row)
    }
}

#[derive(Debug, Error)]
pub enum AppError {
    #[error("schema error in {at}: {message}")]
    Schema { at: Location, message: String },

    #[error("unit error in {at}: {message}")]
    Unit { at: Location, message: String },

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{}: {message}", path.display())]
    Format { path: PathBuf, message: String },

    #[error("{0}")]
    Usage(String),

    #[error(transparent)]
    Core(#[from] meritshift_core::Error),
}

impl AppError {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        AppError::Io {
            path: path.into(),
            source,
        }
    }

    pub fn format(path: impl Into<PathBuf>, message: impl fmt::Display) -> Self {
        AppError::Format {
            path: path.into(),
            message: message.to_string(),
        }
    }

    pub fn exit_status(&self) -> ExitStatus {
        use meritshift_core::Error as E;
        match self {
            AppError::Usage(_) | AppError::Core(E::InvalidConfig(_)) => ExitStatus::Usage,
            AppError::Core(e) if e.is_numerical() => ExitStatus::Numerical,
            _ => ExitStatus::Data,
        }
    }
}

pub type Result<T, E = AppError> = std::result::Result<T, E>;
