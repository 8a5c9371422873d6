use thiserror::Error;

/// Errors surfaced by the library. Mechanism Fail (⊥) is *not* an error:
/// it is a first-class outcome carried by [`crate::oracle::OracleAnswer`]
/// and friends.
#[derive(Debug, Clone, Error)]
pub enum Error {
    /// Bad caller input: malformed data, invalid parameters, dimension
    /// mismatches.
    #[error("input: {0}")]
    Input(String),

    /// The requested operation needs to enumerate a class or universe
    /// that is over the configured cap.
    #[error("capacity: {0}")]
    Capacity(String),

    /// The query family does not support the requested construction.
    #[error("unsupported: {0}")]
    Unsupported(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn dim_mismatch(expected: usize, got: usize) -> Error {
    Error::Input(format!("dimension mismatch: expected {expected}, got {got}"))
}
