//! Error types shared across the crate.

use thiserror::Error;

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;

/// A single invariant violated by a candidate game.
///
/// Validation collects every violation instead of stopping at the first, so
/// one failed load reports everything that is wrong with the file.
#[derive(Debug, Clone, PartialEq)]
pub enum GameViolation {
    /// A meaning whose lexicon row is all zeros: no utterance can express it.
    EmptyMeaningRow { meaning: String },
    /// An utterance whose lexicon column is all zeros: it applies to nothing.
    EmptyUtteranceColumn { utterance: String },
    /// The prior has a negative entry or does not sum to one.
    BadPrior { detail: String },
    /// An utterance cost is negative or non-finite.
    NegativeCost { detail: String },
    /// A lexicon entry lies outside `[0, 1]` or is non-finite.
    OutOfRangeLexicon { detail: String },
}

impl std::fmt::Display for GameViolation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            GameViolation::EmptyMeaningRow { meaning } => {
                write!(f, "meaning `{meaning}` has an all-zero lexicon row")
            }
            GameViolation::EmptyUtteranceColumn { utterance } => {
                write!(f, "utterance `{utterance}` has an all-zero lexicon column")
            }
            GameViolation::BadPrior { detail } => write!(f, "bad prior: {detail}"),
            GameViolation::NegativeCost { detail } => write!(f, "bad cost: {detail}"),
            GameViolation::OutOfRangeLexicon { detail } => {
                write!(f, "bad lexicon: {detail}")
            }
        }
    }
}

fn join_violations(violations: &[GameViolation]) -> String {
    violations
        .iter()
        .map(|v| v.to_string())
        .collect::<Vec<_>>()
        .join("; ")
}

/// Everything that can go wrong constructing games, running dynamics, or
/// reading data files.
#[derive(Debug, Error)]
pub enum Error {
    /// The game violates one or more structural invariants.
    #[error("invalid game: {}", join_violations(.0))]
    InvalidGame(Vec<GameViolation>),

    /// Two meanings or two utterances share a label.
    #[error("duplicate {kind} label `{label}`")]
    DuplicateLabel { kind: &'static str, label: String },

    /// Matrix or vector shapes do not line up.
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    /// A scalar parameter is outside its documented range.
    #[error("bad parameter: {0}")]
    BadParameter(String),

    /// A speaker update found a meaning with no utterance of positive
    /// listener support, so its distribution is undefined.
    #[error("meaning `{0}` has no utterance with positive listener support")]
    MeaningUnreachable(String),

    /// An empirical count column is all zeros, so the column-normalized
    /// listener is undefined for that utterance.
    #[error("utterance `{0}` has zero total count; its empirical column is undefined")]
    EmptyColumn(String),

    /// Pearson correlation is undefined because one side is constant.
    #[error("correlation undefined: {0} has zero variance")]
    ZeroVariance(&'static str),

    /// The requested exhaustive search is too large to enumerate.
    #[error("game too large for brute force: {detail}")]
    TooLarge { detail: String },

    /// A cost form the operation cannot handle.
    #[error("unsupported cost: {0}")]
    UnsupportedCost(&'static str),

    /// A metric came out NaN or infinite where it must be finite; this
    /// indicates a bug rather than a property of the inputs.
    #[error("non-finite value at depth {depth}: {what}")]
    NonFinite { depth: usize, what: String },

    /// An internal consistency check failed; this indicates a bug.
    #[error("internal error: {0}")]
    Internal(String),

    /// A data file does not parse.
    #[error("cannot parse {path}: {message}")]
    Format { path: String, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
