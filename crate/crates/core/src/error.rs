use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// A law or parameter set that cannot be used as given.
    #[error("configuration error: {0}")]
    Configuration(String),

    /// A request outside the supported size range (exact arithmetic,
    /// enumeration bounds, big-integer tables).
    #[error("size error: {what} = {value} exceeds the supported maximum {max}")]
    Size {
        what: &'static str,
        value: usize,
        max: usize,
    },

    /// A precondition on numeric input was violated.
    #[error("precondition violated: {0}")]
    Precondition(String),

    /// A runtime invariant failed. This indicates a bug, not bad input.
    #[error("invariant violated: {0}")]
    Invariant(String),

    #[error("unnormalized distribution: total mass {0}")]
    Unnormalized(f64),

    #[error("io error: {0}")]
    Io(String),
}

impl Error {
    pub(crate) fn config(msg: impl Into<String>) -> Self {
        Error::Configuration(msg.into())
    }

    pub(crate) fn pre(msg: impl Into<String>) -> Self {
        Error::Precondition(msg.into())
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
