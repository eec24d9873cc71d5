use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("phi = {value} is outside the open interval (0, 1/2)")]
    PhiOutOfRange { value: String },

    #[error("{0}")]
    Domain(String),

    #[error("inconsistent inputs: {0}")]
    Consistency(String),

    #[error("internal consistency check failed: {0}")]
    Internal(String),

    #[error("invalid experiment config: `{field}`: {message}")]
    Config { field: &'static str, message: String },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn domain(msg: impl Into<String>) -> Error {
    Error::Domain(msg.into())
}
