use thiserror::Error;

use crate::expr::{EvalError, ParseError};

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("field mismatch: {0:?} vs {1:?}")]
    FieldMismatch(crate::Field, crate::Field),

    #[error("dimension must be at least {min}, got {actual}")]
    DimensionTooSmall { min: usize, actual: usize },

    #[error("non-finite entry at index {0}")]
    NonFinite(usize),

    #[error("real vector has a non-zero imaginary part at index {0}")]
    ImaginaryInReal(usize),

    #[error("zero vector where a non-zero one is required")]
    ZeroVector,

    #[error("frame vectors are not orthonormal (defect {0:e})")]
    NotOrthonormal(f64),

    #[error("radius {0} lies outside the metric domain")]
    OutOfDomain(f64),

    #[error("invalid radius domain: {0}")]
    InvalidDomain(String),

    #[error("invalid metric spec: {0}")]
    InvalidSpec(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("metric takes the negative value {value} during initialization")]
    NonPositiveMetric { value: f64 },

    #[error("no valid initial path inside the domain")]
    NoValidInitialization,

    #[error("homogeneity check failed: deviation {deviation:e} exceeds tolerance")]
    HomogeneityViolation { deviation: f64 },

    #[error("conjugate symmetry check failed: deviation {deviation:e} exceeds tolerance")]
    NotConjugateSymmetric { deviation: f64 },

    #[error("map is not unimodular: |det| = {0}")]
    NotUnimodular(f64),

    #[error("all {0} samples were skipped")]
    AllSamplesSkipped(usize),

    #[error("sample r = {r} is closer than {step} to the domain boundary")]
    TooCloseToBoundary { r: f64, step: f64 },

    #[error(transparent)]
    Parse(#[from] ParseError),

    #[error(transparent)]
    Eval(#[from] EvalError),

    #[error("profile evaluation failed: {0}")]
    Profile(String),

    #[error("json: {0}")]
    Json(String),
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Json(e.to_string())
    }
}
