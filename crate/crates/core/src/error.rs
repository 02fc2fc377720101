use alloc::string::String;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("invalid {side} curve: {reason}")]
    InvalidCurve { side: &'static str, reason: String },

    #[error("curves do not intersect: supply lies above demand over the whole domain")]
    NoIntersection,

    #[error("transformed inverse supply is not monotone at price {price}")]
    MonotonicityViolation { price: f64 },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("invalid record at t={timestamp}: {reason}")]
    InvalidRecord { timestamp: i64, reason: String },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("negative radicand 1 + 2*gamma*rho + gamma^2 for gamma={gamma}, rho={rho}")]
    NegativeRadicand { gamma: f64, rho: f64 },

    #[error("design matrix is rank deficient at column {column} ({name})")]
    RankDeficient { column: usize, name: String },

    #[error("objective returned a non-finite value")]
    NonFiniteObjective,

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("empty input")]
    EmptyInput,

    #[error("loss differential has zero variance")]
    ZeroVariance,

    #[error("mixture is missing constituent fit {0}")]
    MissingConstituent(&'static str),

    #[error("model {expected} expected, got {got}")]
    WrongModel { expected: &'static str, got: &'static str },
}

impl Error {
    /// Failures that come from the numerics rather than from malformed input.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::NoIntersection
                | Error::RankDeficient { .. }
                | Error::NonFiniteObjective
                | Error::ZeroVariance
                | Error::NegativeRadicand { .. }
        )
    }
}
