use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("rejected input: {0}")]
    InvalidInput(String),
    #[error("invalid constraint: {0}")]
    InvalidConstraint(String),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("network shape error: {0}")]
    Shape(String),
}
