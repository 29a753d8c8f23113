use thiserror::Error;

/// Errors shared by every module of the crate.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// Malformed input: bad parameters, schema violations, out-of-range values.
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// A structural precondition of an operation does not hold.
    #[error("precondition violated: {0}")]
    Precondition(String),

    /// An integrand or observable produced NaN or an infinity.
    #[error("non-finite value {value} at sample {sample:?}")]
    NonFinite { value: f64, sample: Vec<f64> },

    /// The question cannot be decided from the data given (tabulated tails).
    #[error("undecided: {0}")]
    Undecided(String),

    /// An exhaustive search would exceed its budget.
    #[error("search budget exceeded: {needed} candidates > budget {budget}; {hint}")]
    BudgetExceeded { needed: f64, budget: f64, hint: String },

    /// A numerical routine could not reach the requested tolerance.
    #[error("tolerance {requested:e} unreachable, achieved bound {achieved:e}")]
    ToleranceUnreached { requested: f64, achieved: f64 },
}

impl Error {
    pub(crate) fn input(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }

    /// True for failures of numerics rather than of the caller's input.
    pub fn is_numeric(&self) -> bool {
        matches!(self, Error::NonFinite { .. } | Error::ToleranceUnreached { .. } | Error::Undecided(_))
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
