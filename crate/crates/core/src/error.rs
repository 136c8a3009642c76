use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// A catalog, signal or spectrum file could not be parsed. `row` is 1-based.
    #[error("parse error at row {row}: {message}")]
    Parse { row: usize, message: String },

    #[error("catalog contains no lines")]
    EmptyCatalog,

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("length mismatch: expected {expected}, got {actual}")]
    LengthMismatch { expected: usize, actual: usize },

    #[error("frequency grids do not match")]
    GridMismatch,

    #[error("windowed energy is zero; the window does not overlap the pulse")]
    ZeroWindowEnergy,

    #[error("signal is identically zero")]
    ZeroSignal,

    #[error("corrupted spectrum: {0}")]
    CorruptSpectrum(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn parse(row: usize, message: impl Into<String>) -> Self {
        Error::Parse {
            row,
            message: message.into(),
        }
    }

    pub(crate) fn invalid(message: impl Into<String>) -> Self {
        Error::InvalidInput(message.into())
    }

    /// True for errors caused by malformed input files rather than numerics.
    pub fn is_format_error(&self) -> bool {
        matches!(
            self,
            Error::Parse { .. }
                | Error::EmptyCatalog
                | Error::Io(_)
                | Error::Json(_)
                | Error::Csv(_)
                | Error::InvalidInput(_)
        )
    }
}
