use thiserror::Error;

/// Errors produced by training, sorting, and the supporting structures.
#[derive(Debug, Error)]
pub enum CoreError {
    #[error("training sample set is empty")]
    EmptyTraining,

    #[error("instance {index} has length {got}, expected {expected}")]
    LengthMismatch {
        index: usize,
        expected: usize,
        got: usize,
    },

    #[error("training stream exhausted: needed {needed} instances, got {got}")]
    InsufficientTraining { needed: usize, got: usize },

    #[error("permutation-entropy oracle supports n <= 8, got n = {n}")]
    TooLargeForOracle { n: usize },

    #[error("invalid spec at `{path}`: {reason}")]
    Spec { path: String, reason: String },

    #[error("representative index {index} looks degenerate: no instance pair separates it")]
    RepresentativeDegenerate { index: usize },

    #[error("line for index {index} has zero slope")]
    ZeroSlopeLine { index: usize },

    #[error("key {key} outside universe of size {universe}")]
    UniverseOverflow { key: usize, universe: usize },

    #[error("non-finite value {value} at index {index}")]
    NonFiniteValue { index: usize, value: f64 },

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("bad instance stream at line {line}: {reason}")]
    StreamFormat { line: usize, reason: String },
}

impl CoreError {
    pub fn spec(path: impl Into<String>, reason: impl Into<String>) -> Self {
        CoreError::Spec {
            path: path.into(),
            reason: reason.into(),
        }
    }
}

pub type Result<T> = std::result::Result<T, CoreError>;
