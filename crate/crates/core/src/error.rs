use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum Error {
    #[error("unsupported generator: {0}")]
    UnsupportedGenerator(String),

    #[error("{what} limit exceeded: {actual} > {limit}")]
    LimitExceeded { what: &'static str, limit: usize, actual: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn limit(what: &'static str, limit: usize, actual: usize) -> Self {
        Error::LimitExceeded { what, limit, actual }
    }
}
