use thiserror::Error;

/// Errors raised while building, solving or evaluating a dynamic inference problem.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid alphabet {name}: {reason}")]
    InvalidAlphabet { name: String, reason: String },

    #[error("dimension mismatch in {context}: expected {expected}, found {found}")]
    DimensionMismatch {
        context: String,
        expected: usize,
        found: usize,
    },

    #[error("{context} is not a probability distribution: {reason}")]
    NotStochastic { context: String, reason: String },

    #[error("horizon mismatch: n = {n} needs {expected} {kind} kernels, found {found}")]
    HorizonMismatch {
        n: usize,
        kind: &'static str,
        expected: usize,
        found: usize,
    },

    #[error("loss table: {0}")]
    InvalidLoss(String),

    #[error("unknown label {label:?} in {alphabet}")]
    UnknownLabel { alphabet: String, label: String },

    #[error("round {round} out of range 1..={n}")]
    RoundOutOfRange { round: usize, n: usize },

    #[error("strategy shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("result does not match problem: {0}")]
    MismatchedResult(String),

    #[error("search space too large: {count} strategies exceed the limit of {limit}")]
    SearchSpaceTooLarge { count: String, limit: String },

    #[error("history strategy incomplete: {0}")]
    HistoryIncomplete(String),

    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("malformed input: {0}")]
    Parse(String),
}

impl Error {
    /// Stable machine-readable name of the error variant.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::InvalidAlphabet { .. } => "InvalidAlphabet",
            Error::DimensionMismatch { .. } => "DimensionMismatch",
            Error::NotStochastic { .. } => "NotStochastic",
            Error::HorizonMismatch { .. } => "HorizonMismatch",
            Error::InvalidLoss(_) => "InvalidLoss",
            Error::UnknownLabel { .. } => "UnknownLabel",
            Error::RoundOutOfRange { .. } => "RoundOutOfRange",
            Error::ShapeMismatch(_) => "ShapeMismatch",
            Error::MismatchedResult(_) => "MismatchedResult",
            Error::SearchSpaceTooLarge { .. } => "SearchSpaceTooLarge",
            Error::HistoryIncomplete(_) => "HistoryIncomplete",
            Error::InvalidParams(_) => "InvalidParams",
            Error::Parse(_) => "Parse",
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
