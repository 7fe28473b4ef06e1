use thiserror::Error;

/// Errors produced by the detection pipeline and its I/O helpers.
#[derive(Debug, Error)]
pub enum Error {
    #[error("series too short: {len} samples, need at least {min}")]
    TooShort { len: usize, min: usize },

    #[error("values and mask lengths differ ({values} vs {mask})")]
    LengthMismatch { values: usize, mask: usize },

    #[error("series has no observed values")]
    NoObservations,

    #[error("need at least {needed} observed values, found {found}")]
    TooFewObserved { needed: usize, found: usize },

    #[error("observed value at index {index} is not finite")]
    NonFinite { index: usize },

    #[error("row {row}: cannot parse {cell:?} as a number")]
    Parse { row: usize, cell: String },

    #[error("column {0} not found")]
    MissingColumn(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("infeasible synthetic spec: {0}")]
    Infeasible(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// True for errors caused by the input data rather than by configuration.
    pub fn is_input_error(&self) -> bool {
        !matches!(self, Error::Config(_) | Error::Infeasible(_))
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
