use thiserror::Error;

/// Errors returned by clock, object and simulator operations.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("filter length mismatch: {0} vs {1}")]
    LengthMismatch(usize, usize),
    #[error("bit width {0} out of range 1..=16")]
    BitWidth(u8),
    #[error("counter {value} does not fit in {width} bits")]
    CounterOverflow { value: u32, width: u8 },
    #[error("invalid clock configuration: {0}")]
    InvalidConfig(&'static str),
    #[error("clock configurations differ")]
    ConfigMismatch,
    #[error("unknown mutation function {0}")]
    UnknownFunction(u32),
    #[error("function {fn_id} expects {expected} parents, got {got}")]
    Arity { fn_id: u32, expected: usize, got: usize },
    #[error("index {index} out of range for system of size {size}")]
    IndexOutOfRange { index: usize, size: usize },
    #[error("unknown object id {0}")]
    UnknownObject(u64),
    #[error("parent proof does not verify")]
    InvalidParentProof,
    #[error("replica group of {requested} requested from {available} nodes")]
    GroupTooLarge { requested: usize, available: usize },
    #[error("malformed encoding: {0}")]
    Decode(&'static str),
    #[error("scenario rejected: {0}")]
    Scenario(alloc::string::String),
}
