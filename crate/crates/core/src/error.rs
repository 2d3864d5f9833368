use thiserror::Error;

/// Errors produced across the toolkit.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid distribution: {0}")]
    InvalidDistribution(String),

    #[error("alphabet mismatch: {0}")]
    AlphabetMismatch(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("output symbol {0} has zero probability")]
    ZeroOutputProbability(usize),

    #[error("empty sequence")]
    EmptySequence,

    #[error("symbol {symbol} outside alphabet of size {size}")]
    SymbolOutOfRange { symbol: usize, size: usize },

    #[error("operation requires exact rational masses")]
    RequiresExact,

    #[error("type {q} is not achievable at blocklength {n}")]
    UnachievableType { n: usize, q: String },

    #[error("enumeration budget exceeded: {size} > {budget}")]
    BudgetExceeded { size: String, budget: u64 },

    #[error("state space too large: {size} > {limit}")]
    StateSpaceTooLarge { size: u128, limit: u128 },

    #[error("negative tolerance or distortion: {0}")]
    Negative(String),

    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },

    #[error("distortion spec must be additive for this operation")]
    NotAdditive,

    #[error("distortion spec lacks a permutation-invariance certificate at blocklength {0}")]
    Uncertified(usize),

    #[error("unsupported blocklength {0}")]
    UnsupportedBlocklength(usize),

    #[error("infeasible: {0}")]
    Infeasible(String),

    #[error("empty channel set")]
    EmptySet,

    #[error("duality violated: channel side {channel}, source side {source_side}")]
    DualityViolated { channel: String, source_side: String },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("io: {0}")]
    Io(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
