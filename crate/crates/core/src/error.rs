use thiserror::Error;

/// Errors produced by the capacity library.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("operation requires a non-empty word")]
    EmptyWord,

    #[error("run-length description contains a zero-length run")]
    ZeroRun,

    #[error("word length {len} exceeds the packed limit of {max} bits")]
    WordTooLong { len: usize, max: usize },

    #[error("invalid bit {0:?}; expected '0' or '1'")]
    InvalidBit(char),

    #[error("word has length {found}, expected {expected}")]
    LengthMismatch { expected: usize, found: usize },

    #[error("invalid channel parameters: {0}")]
    InvalidParams(String),

    #[error("Markov transition probability {0} outside [0, 1]")]
    InvalidAlpha(f64),

    #[error("block length {ell} exceeds the enumeration cap of {cap}")]
    EnumerationCap { ell: usize, cap: usize },

    #[error("integer overflow computing {0}")]
    Overflow(&'static str),

    #[error("distribution is invalid: {0}")]
    InvalidDistribution(String),

    #[error("expansion regime {regime} requires {requirement}")]
    RegimeMismatch {
        regime: &'static str,
        requirement: &'static str,
    },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

pub type Result<T> = std::result::Result<T, Error>;
