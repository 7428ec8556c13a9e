use thiserror::Error;

/// Every failure the library reports. The CLI maps `Malformed` to exit
/// status 2 and the rest to 1.
#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum Error {
    #[error("malformed input: {0}")]
    Malformed(String),
    #[error("incompatible context: {0}")]
    IncompatibleContext(String),
    #[error("domain error: {0}")]
    Domain(String),
    #[error("precondition failed: {0}")]
    Precondition(String),
    #[error("malformed tree: {0}")]
    MalformedTree(String),
    #[error("invalid fold: {0}")]
    InvalidFold(String),
    #[error("not applicable: {0}")]
    NotApplicable(String),
    #[error("refused: {0}")]
    Refused(String),
    #[error("obstruction: {0}")]
    Obstruction(String),
    #[error("inconclusive: {0}")]
    Inconclusive(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn malformed<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Malformed(msg.into()))
}
