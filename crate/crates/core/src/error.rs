//! Crate-wide error type.

use crate::series::QuarterDate;
use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error("cannot parse {text:?} as a quarterly date (expected YYYYQn or YYYY-MM)")]
    ParseDate { text: String },

    #[error("column {column:?} not found in input")]
    MissingColumn { column: String },

    #[error("missing value in column {column:?} at {date}")]
    MissingValue { column: String, date: QuarterDate },

    #[error("series is not contiguous: expected {expected}, found {found}")]
    Contiguity {
        expected: QuarterDate,
        found: QuarterDate,
    },

    #[error("non-positive index value {value} in {label:?} at {date}")]
    NonPositiveValue {
        label: String,
        date: QuarterDate,
        value: f64,
    },

    #[error("series must be non-empty")]
    EmptySeries,

    #[error("insufficient data: need at least {needed} observations, got {got}")]
    InsufficientData { needed: usize, got: usize },

    #[error("series kind mismatch: expected {expected}, got {got}")]
    KindMismatch {
        expected: &'static str,
        got: &'static str,
    },

    #[error("series are not aligned: {detail}")]
    Misaligned { detail: String },

    #[error("window is empty or outside the series range")]
    BadWindow,

    #[error("dimension mismatch: {detail}")]
    DimensionMismatch { detail: String },

    #[error("design matrix is rank deficient: column {column:?} is linearly dependent on prior columns")]
    RankDeficient { column: String },

    #[error("series has zero variance")]
    ZeroVariance,

    #[error("restriction system is infeasible or has dependent rows")]
    InfeasibleRestrictions,

    #[error("no (R,M) cell on the grid produced a converged fit: {failures}")]
    NoConvergedFit { failures: String },

    #[error("exogenous values are required but missing or too short ({detail})")]
    MissingExogenous { detail: String },

    #[error("forecast panel is empty")]
    EmptyPanel,

    #[error("forecast panels are not comparable: {detail}")]
    PanelMismatch { detail: String },

    #[error("forecast series are collinear with the intercept; encompassing regression is not identified")]
    CollinearForecasts,

    #[error("numeric failure: {detail}")]
    Numeric { detail: String },

    #[error("invalid parameter: {detail}")]
    InvalidParameter { detail: String },

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}
