use chrono::NaiveDate;
use thiserror::Error;

use crate::calendar::YearMonth;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid hierarchy: {0}")]
    InvalidHierarchy(String),

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("invalid time series: {0}")]
    InvalidSeries(String),

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("invalid shares: {0}")]
    InvalidShares(String),

    #[error("invalid weights: {0}")]
    InvalidWeights(String),

    #[error("numeric failure: {0}")]
    Numeric(String),

    #[error("invalid agent config: {0}")]
    InvalidConfig(String),

    #[error("cycle has no days")]
    EmptyCycle,

    #[error("invalid distribution: {0}")]
    InvalidDistribution(String),

    #[error("out-of-order actual: expected day {expected}, got day {got}")]
    StreamOrder { expected: usize, got: usize },

    #[error("division by zero: {0}")]
    DivisionByZero(&'static str),

    #[error("schema error: {0}")]
    Schema(String),

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("duplicate date {0}")]
    DuplicateDate(NaiveDate),

    #[error("month {month} is incomplete: {reason}")]
    IncompleteMonth { month: YearMonth, reason: String },

    #[error("q-table snapshot: {0}")]
    Snapshot(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
