use alloc::string::String;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("cannot build an index over an empty collection")]
    EmptyCollection,

    #[error("ids and vectors differ in length ({ids} ids, {vectors} vectors)")]
    LengthMismatch { ids: usize, vectors: usize },
}
