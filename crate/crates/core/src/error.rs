use thiserror::Error;

/// Errors returned by the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("unsupported order: {0}")]
    UnsupportedOrder(String),
    #[error("invalid cardinality: {0}")]
    InvalidCardinality(String),
    #[error("duplicate symbols at rows {0} and {1}")]
    DuplicateSymbol(usize, usize),
    #[error("capacity exceeded: {0}")]
    Capacity(String),
    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("value out of range: {0}")]
    OutOfRange(String),
    #[error("labeling does not match constellation: {0}")]
    LabelingMismatch(String),
    #[error("constellation has no Cartesian product structure")]
    NotProduct,
    #[error("infeasible: {0}")]
    Infeasible(String),
    #[error("validation error: {0}")]
    Validation(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn parse_err(line: usize, msg: impl Into<String>) -> Error {
    Error::Parse {
        line,
        msg: msg.into(),
    }
}
