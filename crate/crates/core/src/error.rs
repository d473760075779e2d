use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid index (n={n}, k={k}): {reason}")]
    InvalidIndex { n: usize, k: usize, reason: &'static str },

    #[error("n={n} exceeds table range n_max={n_max}")]
    OutOfTable { n: usize, n_max: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("invalid partition state: {0}")]
    InvalidState(String),

    #[error("increment vector has length {got}, state has {expected} blocks")]
    MismatchedIncrements { expected: usize, got: usize },

    #[error("conditioning event has zero probability")]
    ZeroProbability,

    #[error("{what} = {got} exceeds enumeration guard {limit}")]
    SizeGuard { what: &'static str, limit: usize, got: usize },

    #[error("weight table rejected: {0}")]
    InvalidTable(String),
}
