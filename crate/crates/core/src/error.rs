use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid geometry: {0}")]
    Geometry(String),

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: String, actual: String },

    #[error("non-finite value at index {0}")]
    NonFinite(usize),

    #[error("measurement value {value} at index {index} exceeds quantizer scale {y_max}")]
    Scale {
        index: usize,
        value: f64,
        y_max: f64,
    },

    #[error("code {code} at index {index} out of range for {bits}-bit quantizer")]
    CodeRange { index: usize, code: u16, bits: u8 },

    #[error("invalid quantizer: {0}")]
    Quantizer(String),

    #[error("invalid decoder configuration: {0}")]
    Config(String),

    #[error("degenerate mask: no measurement pixel receives any block")]
    DegenerateMask,

    #[error("sensing matrix is singular for every seed tried from {0}")]
    SingularSensing(u64),

    #[error("stream format error: {0}")]
    Format(String),

    #[error("image format error: {0}")]
    Image(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn mismatch(expected: impl ToString, actual: impl ToString) -> Error {
    Error::DimensionMismatch {
        expected: expected.to_string(),
        actual: actual.to_string(),
    }
}
