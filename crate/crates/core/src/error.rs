use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// A point (or parameter) lies outside the open domain it was checked against.
    #[error("domain violation at coordinate {coordinate}: value {value} is outside {domain}")]
    Domain {
        coordinate: usize,
        value: f64,
        domain: String,
    },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },

    /// A dual point lies outside the range of the gradient map.
    #[error("range violation at coordinate {coordinate}: dual value {value} is outside the gradient range ({range})")]
    Range {
        coordinate: usize,
        value: f64,
        range: String,
    },

    #[error("numeric failure: {0}")]
    Numeric(String),

    #[error("budget exceeded: {0}")]
    Budget(String),

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("invalid value for `{field}`: {message}")]
    Parse { field: String, message: String },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn parse(field: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Parse {
            field: field.into(),
            message: message.into(),
        }
    }
}
