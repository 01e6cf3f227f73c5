use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },
    #[error("node {0} is not an interior node")]
    NotInterior(usize),
    #[error("field length {got} does not match interior node count {expected}")]
    LengthMismatch { expected: usize, got: usize },
    #[error("denominator vanishes")]
    ZeroDenominator,
    #[error("energy of the {0} component vanishes")]
    ZeroEnergy(&'static str),
    #[error("value overflows f64 (log magnitude {0})")]
    Overflow(f64),
    #[error("negative values in a field required to be nonnegative (min {0})")]
    Negative(f64),
    #[error("empty evaluation set")]
    EmptyEvaluationSet,
    #[error("{0}")]
    Report(String),
    #[error("io: {0}")]
    Io(String),
}

impl Error {
    pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
