use thiserror::Error;

use crate::bounds::AggregateReport;
use crate::deviation::LemmaReport;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// The instance document is not well-formed.
    #[error("parse error: {0}")]
    Parse(String),

    /// The document parsed but describes an invalid game.
    #[error("validation error at {field}: {reason}")]
    Validation { field: String, reason: String },

    /// An exhaustive scan would exceed its configured cap.
    #[error("budget exceeded: {what} has size {size}, budget is {budget}")]
    Budget {
        what: &'static str,
        size: u128,
        budget: u128,
    },

    #[error("domain error: {0}")]
    Domain(String),

    /// Input has the wrong shape for the requested construction.
    #[error("structure error: {0}")]
    Structure(String),

    /// The operation does not apply to this kind of game (e.g. directed).
    #[error("precondition failed: {0}")]
    Precondition(String),

    #[error("random instance generation failed: {0}")]
    Generation(String),

    /// A deviation-profile bound did not hold; carries the full breakdown.
    #[error("bound violated: {0}")]
    LemmaViolation(Box<LemmaReport>),

    #[error("aggregate bound violated: {0}")]
    AggregateViolation(Box<AggregateReport>),

    /// An internal consistency check failed. Always a bug.
    #[error("invariant broken: {0}")]
    Invariant(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn validation(field: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::Validation {
            field: field.into(),
            reason: reason.into(),
        }
    }
}
