use thiserror::Error;

use crate::expr::ParseError;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("point {point:?} lies outside the domain of chart `{chart}`")]
    Domain { chart: String, point: Vec<f64> },

    #[error("non-finite value while evaluating {what}")]
    NonFinite { what: String },

    #[error("usage error: {0}")]
    Usage(String),

    #[error(transparent)]
    Parse(#[from] ParseError),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("precondition failed: {what} (residual {residual:.3e})")]
    Precondition { what: String, residual: f64 },

    #[error("invalid structure: {0}")]
    InvalidStructure(String),

    #[error("invalid complex: {0}")]
    InvalidComplex(String),

    #[error("{what} is not constant over the samples (spread {spread:.3e})")]
    NonConstant { what: String, spread: f64 },

    #[error("map is not a homothety of the form (ratio spread {spread:.3e})")]
    NotHomothety { spread: f64 },

    #[error("could not sample {wanted} points in chart `{chart}` ({found} found)")]
    Sampling { chart: String, wanted: usize, found: usize },

    #[error("declaration error: {0}")]
    Declaration(String),

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),

    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn usage(msg: impl Into<String>) -> Self {
        Error::Usage(msg.into())
    }

    pub(crate) fn non_finite(what: impl Into<String>) -> Self {
        Error::NonFinite { what: what.into() }
    }
}
