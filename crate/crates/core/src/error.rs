use thiserror::Error;

/// Errors raised by the analysis and extraction routines.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("empty series")]
    EmptySeries,
    #[error("malformed header: {0}")]
    MalformedHeader(String),
    #[error("non-monotone timestamps at index {0}")]
    NonMonotone(usize),
    #[error("raw IPI {0} outside [20, 330]")]
    Range(i64),
    #[error("bad k: {0} (expected 1..=8)")]
    BadK(u32),
    #[error("config: {0}")]
    Config(String),
    #[error("empty input")]
    Empty,
    #[error("stream too short: need {needed} bits, have {have}")]
    TooShort { needed: usize, have: usize },
    #[error("bad word length n = {0}")]
    BadWordLength(u32),
    #[error("empty distribution")]
    EmptyDistribution,
    #[error("invalid distribution: {0}")]
    InvalidDistribution(String),
    #[error("insufficient subjects: {eligible} eligible, need at least 2")]
    InsufficientSubjects { eligible: usize },
    #[error("insufficient bits: need {needed}, have {have}")]
    InsufficientBits { needed: usize, have: usize },
    #[error("insufficient data: {0}")]
    InsufficientData(String),
    #[error("parse: {0}")]
    Parse(String),
}

impl Error {
    /// True for errors caused by the input not meeting an analysis
    /// precondition (as opposed to malformed input or bad arguments).
    pub fn is_precondition(&self) -> bool {
        matches!(
            self,
            Error::TooShort { .. }
                | Error::EmptyDistribution
                | Error::InsufficientSubjects { .. }
                | Error::InsufficientBits { .. }
                | Error::InsufficientData(_)
                | Error::Empty
                | Error::EmptySeries
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
