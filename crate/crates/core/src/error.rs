use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("price file not found: {0}")]
    MissingFile(PathBuf),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
    #[error("malformed header: {0}")]
    Header(String),
    #[error("non-numeric cell at row {row}, column {column}: {value:?}")]
    NonNumeric {
        row: usize,
        column: String,
        value: String,
    },
    #[error("non-positive price at row {row}, column {column}")]
    NonPositivePrice { row: usize, column: String },
    #[error("ragged row {row}: expected {expected} cells, found {found}")]
    RaggedRow {
        row: usize,
        expected: usize,
        found: usize,
    },
    #[error("dates not strictly increasing at row {row}")]
    DatesNotIncreasing { row: usize },
    #[error("insufficient observations: need at least {needed}, have {have}")]
    InsufficientObservations { needed: usize, have: usize },
    #[error("no out-of-sample data: {total} observations with in-sample length {in_len}")]
    NoOutOfSample { total: usize, in_len: usize },
    #[error("invalid window parameters: {0}")]
    InvalidWindow(String),

    #[error("invalid lottery: {0}")]
    InvalidLottery(String),
    #[error("lottery not nonnegative; use h2")]
    NegativeLottery,
    #[error("q must be positive, got {0}")]
    NonPositiveQ(f64),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("invalid portfolio weights: {0}")]
    InvalidWeights(String),
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("covariance matrix is not symmetric (entry ({row}, {col}))")]
    NotSymmetric { row: usize, col: usize },
    #[error("malformed LP: {0}")]
    MalformedLp(String),
    #[error(
        "MILP valid only for λ₊≤1/2≤λ₋; use multistart (got λ₊={lambda_plus}, λ₋={lambda_minus})"
    )]
    MilpRegime { lambda_plus: f64, lambda_minus: f64 },
    #[error("solver failed: {0}")]
    SolverFailed(String),

    #[error("wealth annihilated at period {period} (return {value})")]
    WealthAnnihilated { period: usize, value: f64 },
    #[error("series too short: {0}")]
    SeriesTooShort(String),
    #[error("window {window}: {source}")]
    Window {
        window: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
    #[error("malformed table: {0}")]
    Table(String),
}
