use alloc::boxed::Box;
use alloc::string::String;

use thiserror::Error;

pub type Result<T> = core::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("design matrix is rank deficient: {deficient} of {cols} columns are linearly dependent")]
    RankDeficient { deficient: usize, cols: usize },

    #[error("response carries no information: every label is {0}")]
    DegenerateResponse(u8),

    #[error("no non-degenerate subset found after {0} draws")]
    DegenerateSubsets(usize),

    #[error("leave-one-out fold {fold} failed: {source}")]
    FoldFailed { fold: usize, source: Box<Error> },

    #[error("empty input: {0}")]
    Empty(&'static str),

    #[error("comparison did not flip within {0} contaminated instances")]
    NoBreakdown(usize),

    #[error("exhaustive U-statistic needs {0} tuples; use the sampled variant")]
    TooManyTuples(u128),
}

impl Error {
    pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter { name, reason: reason.into() }
    }

    /// True for failures caused by the numbers rather than by the caller's input.
    pub fn is_numerical(&self) -> bool {
        match self {
            Error::RankDeficient { .. } | Error::DegenerateSubsets(_) | Error::NoBreakdown(_) => true,
            Error::FoldFailed { source, .. } => source.is_numerical(),
            _ => false,
        }
    }
}
