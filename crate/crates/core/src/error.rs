use thiserror::Error;

/// Errors produced by the analysis library.
#[derive(Debug, Error)]
pub enum Error {
    /// A corpus record could not be read.
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    /// Two records claim the same turn of one dialogue.
    #[error("dialogue `{dialogue}` has duplicate turn_index {turn}")]
    DuplicateTurn { dialogue: String, turn: u64 },

    /// A marker dictionary is malformed.
    #[error("dictionary: {0}")]
    Dictionary(String),

    /// Parameters or filters are inconsistent.
    #[error("invalid configuration: {0}")]
    Config(String),

    /// The data is well formed but too small for the requested estimate.
    #[error("insufficient data: {0}")]
    InsufficientData(String),

    /// An estimator was handed zero rows.
    #[error("empty sample")]
    EmptySample,
}

impl Error {
    /// True when the input was valid but the analysis could not be carried out.
    pub fn is_infeasible(&self) -> bool {
        matches!(self, Error::InsufficientData(_) | Error::EmptySample)
    }
}

pub type Result<T> = std::result::Result<T, Error>;
