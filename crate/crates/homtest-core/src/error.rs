use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum Error {
    #[error("invalid element for this group: {0}")]
    InvalidElement(String),

    #[error("enumeration cap exceeded: needed {needed}, cap {cap}")]
    TooLarge { needed: u128, cap: u128 },

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("invalid descriptor: {0}")]
    InvalidDescriptor(String),

    #[error("k={k} is outside the theorem's range for {family}: {reason}")]
    OutOfTheoremRange {
        k: u32,
        family: String,
        reason: String,
    },

    #[error("parse error at {line}:{col}: {msg}")]
    Parse { line: usize, col: usize, msg: String },
}

pub type Result<T> = std::result::Result<T, Error>;
