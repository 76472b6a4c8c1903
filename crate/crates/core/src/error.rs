use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("contract violation: {0}")]
    Contract(String),
    #[error("spectrum outside function domain: {0}")]
    Domain(String),
    #[error("structure: {0}")]
    Structure(String),
    #[error("invalid input: {0}")]
    Input(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn shape(msg: impl Into<String>) -> Error {
    Error::Shape(msg.into())
}

pub(crate) fn contract(msg: impl Into<String>) -> Error {
    Error::Contract(msg.into())
}
