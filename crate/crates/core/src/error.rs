use thiserror::Error;

/// Errors raised by the schedule, model and engine layers.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid input: {0}")]
    Validation(String),

    #[error("{field}: {message}")]
    Field { field: String, message: String },

    #[error("index {index} out of range 1..={max} for {what}")]
    OutOfRange {
        what: &'static str,
        index: usize,
        max: usize,
    },

    #[error("no positive IRR: instalments do not exceed the principal")]
    NoPositiveIrr,

    #[error("variance exceeds beta bound: sd^2 = {variance} >= mean(1-mean) = {bound}")]
    InfeasibleBeta { variance: f64, bound: f64 },

    #[error("degenerate recovery mean {0}: beta parameters need a mean strictly inside (0, 1)")]
    DegenerateBeta(f64),

    #[error("sampling requires a distributional family for recovery in state {state}, month {month}")]
    NoDistribution { state: char, month: usize },

    #[error("expected sojourn requires a homogeneous persistence sequence")]
    NonHomogeneous,

    #[error("infinite sojourn: persistence probability equals 1")]
    InfiniteSojourn,

    #[error("horizon mismatch: {0}")]
    Horizon(String),

    #[error("probability mass {mass} deviates from 1 for initial state {state}")]
    MassDefect { state: char, mass: f64 },

    #[error("limit CV undefined for nonpositive expected value {0}")]
    NonPositiveMean(f64),
}

impl Error {
    pub(crate) fn field(field: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Field {
            field: field.into(),
            message: message.into(),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
