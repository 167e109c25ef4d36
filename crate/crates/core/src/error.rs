use thiserror::Error;

use crate::value::ColumnType;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("type mismatch: expected {expected}, got {found}")]
    TypeMismatch { expected: ColumnType, found: String },

    #[error("code {code} out of range for {len} entries")]
    CodeOutOfRange { code: u64, len: usize },

    #[error("cardinality must be at least 1")]
    InvalidCardinality,

    #[error("column {0} is not numeric")]
    NonNumericColumn(String),

    #[error("column has no live rows")]
    EmptyColumn,

    #[error("value is not numeric: {0}")]
    NonNumeric(String),

    #[error("dictionary would need {0} bits per code (max 32)")]
    CapacityExceeded(u32),

    #[error("unknown column {0}")]
    UnknownColumn(String),

    #[error("row {0} is not live")]
    DeadRow(u64),

    #[error("degenerate range: max ({max}) must exceed min ({min})")]
    DegenerateRange { min: f64, max: f64 },

    #[error("zero variance column")]
    ZeroVariance,

    #[error("domain error: {0}")]
    DomainError(String),

    #[error("bucket boundaries must be strictly increasing")]
    UnsortedBoundaries,

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("{kind} is not applicable to {ty} columns")]
    NotApplicable { kind: &'static str, ty: ColumnType },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("an ADV named {name} already exists on column {column}")]
    DuplicateName { column: String, name: String },

    #[error("unknown feature {0}")]
    UnknownFeature(String),

    #[error("invalid request: {0}")]
    InvalidRequest(String),

    #[error("feature {feature} produced a non-finite value at row {row}")]
    NonFinite { feature: String, row: u64 },

    #[error("ADV and raw paths disagree at row {row}, column {column}: {adv} vs {raw}")]
    MismatchDetected {
        row: usize,
        column: usize,
        adv: f32,
        raw: f32,
    },

    #[error("malformed input: {0}")]
    Malformed(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
