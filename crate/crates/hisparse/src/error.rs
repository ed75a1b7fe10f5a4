use thiserror::Error;

/// Errors produced by the library.
#[derive(Debug, Error)]
pub enum Error {
    /// Vector or operator dimensions do not line up.
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    /// An argument is outside its documented domain.
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// A tree or sparsity structure violates its invariants.
    #[error("invalid structure: {0}")]
    InvalidStructure(String),

    /// A hierarchical support violates the chain or budget conditions.
    #[error("invalid support: {0}")]
    InvalidSupport(String),

    /// Numerically degenerate input (zero column, zero vector, ...).
    #[error("degenerate input: {0}")]
    DegenerateInput(String),

    /// An exhaustive enumeration would exceed the configured cap.
    #[error("enumeration of {supports} supports exceeds cap {cap}")]
    EnumerationCap { supports: String, cap: u64 },

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("config error: {0}")]
    Config(String),

    #[error("serialization error: {0}")]
    Serde(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
