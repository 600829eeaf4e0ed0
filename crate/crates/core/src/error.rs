use thiserror::Error;

/// Errors raised anywhere in the classification pipeline.
#[derive(Debug, Error)]
pub enum HdcError {
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error("row {row}: expected {expected} cells, found {found}")]
    RaggedRow {
        row: usize,
        expected: usize,
        found: usize,
    },

    #[error("row {row}, column {column}: non-finite numeric value {value:?}")]
    NonFinite {
        row: usize,
        column: usize,
        value: String,
    },

    #[error("row {row}, column {column}: {message}")]
    Cell {
        row: usize,
        column: usize,
        message: String,
    },

    #[error("input is empty: {0}")]
    Empty(&'static str),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("label {label} out of range for {n_classes} classes")]
    LabelOutOfRange { label: usize, n_classes: usize },

    #[error("unknown label {0:?}")]
    UnknownLabel(String),

    #[error("dimension index {index} out of range for dimension {dim}")]
    IndexOutOfRange { index: usize, dim: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("unsupported bitwidth {0}; expected one of 1, 2, 4, 8, 16, 32")]
    UnsupportedBitwidth(u32),

    #[error("bad checkpoint: {0}")]
    Checkpoint(String),

    #[error("sample {index}: {source}")]
    AtSample {
        index: usize,
        #[source]
        source: Box<HdcError>,
    },

    #[error("invariant violated: {0}")]
    Invariant(String),
}

impl HdcError {
    pub(crate) fn at(index: usize, source: HdcError) -> Self {
        HdcError::AtSample {
            index,
            source: Box::new(source),
        }
    }

    pub(crate) fn param(msg: impl Into<String>) -> Self {
        HdcError::InvalidParameter(msg.into())
    }
}

pub type Result<T> = std::result::Result<T, HdcError>;
