use thiserror::Error;

/// Errors shared across the crate.
#[derive(Debug, Error)]
pub enum Error {
    /// An argument violated a documented precondition.
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// A computation was refused because it exceeds a hard budget
    /// (e.g. full enumeration above the dimension limit).
    #[error("budget exceeded: {0}")]
    BudgetExceeded(String),

    /// A continuation sweep could not get off the ground.
    #[error("sweep aborted: {0}")]
    SweepAbort(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidArgument(msg.into())
}
