use thiserror::Error;

/// Errors shared across the crate.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("history is empty")]
    EmptyHistory,

    #[error("sample too small: need at least {need} examples, got {got}")]
    SampleTooSmall { need: usize, got: usize },

    #[error("statistic window is empty or undefined (n={n}, c_n={c_n})")]
    EmptyWindow { n: usize, c_n: usize },

    #[error("missing hypothesis snapshot for index {t}")]
    MissingSnapshot { t: usize },

    #[error("loss kind is incompatible with the hypothesis kind")]
    LossMismatch,

    #[error("hypotheses of this kind cannot be averaged together")]
    NotAverageable,

    #[error("data contains a single class only")]
    SingleClass,

    #[error("symmetric eigendecomposition did not converge")]
    EigenFailure,

    #[error("matrix is not symmetric (max asymmetry {asymmetry:e})")]
    NotSymmetric { asymmetry: f64 },

    #[error("infeasible generator: {0}")]
    InfeasibleGenerator(String),

    #[error("batch oracle requires a convex loss; this learner kind has none")]
    NonConvexLoss,

    #[error("malformed CSV at line {line}: {reason}")]
    CsvFormat { line: usize, reason: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub fn invalid(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
