use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum Error {
    #[error("invalid parameters: {0}")]
    InvalidParameters(String),
    #[error("parse error on line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("line {line}: clause has {len} literals, expected exactly 3")]
    NotThreeCnf { line: usize, len: usize },
    #[error("line {line}: variable {var} appears more than once in a clause")]
    DuplicateVariable { line: usize, var: u32 },
    #[error("line {line}: variable {var} exceeds declared variable count {n}")]
    OutOfRange { line: usize, var: u32, n: u32 },
    #[error("resource limit exceeded: {0}")]
    ResourceLimit(String),
    #[error("internal inconsistency: {0}")]
    InternalInconsistency(String),
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("instance too large: {size} exceeds limit {limit}")]
    TooLarge { size: usize, limit: usize },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
