use thiserror::Error;

use crate::circuit::ParseError;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// A backend or precision setting that cannot be honored.
    #[error("configuration error: {0}")]
    Config(String),
    /// A malformed gate, assignment or query argument.
    #[error("argument error: {0}")]
    Argument(String),
    /// A table or memory limit was exceeded.
    #[error("resource error: {0}")]
    Resource(String),
    #[error("unknown backend `{0}`")]
    UnknownBackend(String),
    #[error(transparent)]
    Parse(#[from] ParseError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
