use thiserror::Error;

/// Errors raised by the algebraic constructions.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("invalid group: {0}")]
    InvalidGroup(String),
    #[error("invalid partial action: {0}")]
    InvalidAction(String),
    #[error("invalid bundle action: {0}")]
    InvalidBundle(String),
    #[error("partial actions do not commute: {0}")]
    NotCommuting(String),
    #[error("partial action is not free: point {point} has stabilizer {stabilizer:?}")]
    NotFree { point: String, stabilizer: Vec<usize> },
    #[error("partial action is not global")]
    NotGlobal,
    #[error("point sets do not match")]
    PointMismatch,
    #[error("element is not in the expected subspace: {0}")]
    NotInSubspace(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error("internal check failed: {0}")]
    Assertion(String),
}
