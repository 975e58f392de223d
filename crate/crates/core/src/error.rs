use num_complex::Complex64;
use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("jets are incompatible: {0}")]
    JetMismatch(String),

    #[error("derivative order ({p}, {q}) exceeds jet bi-order ({max_p}, {max_q})")]
    OrderOutOfRange {
        p: usize,
        q: usize,
        max_p: usize,
        max_q: usize,
    },

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("DegenerateMetric: {0}")]
    DegenerateMetric(String),

    #[error("DegenerateJetMetric: J_{k}(h) is not positive definite (min/max eigenvalue ratio {ratio:e})")]
    DegenerateJetMetric { k: usize, ratio: f64 },

    #[error("point {z} lies outside the admissible disk of radius {radius}")]
    OutOfDomain { z: Complex64, radius: f64 },

    #[error("kernel series tail bound not met: {0}")]
    KernelTail(String),

    #[error("invalid model: {0}")]
    InvalidModel(String),

    #[error("finite-difference stencil needs margin {needed} around {z} but the domain only allows {available}")]
    InsufficientMargin {
        z: Complex64,
        needed: f64,
        available: f64,
    },

    #[error("InternalInconsistency: {what} (discrepancy {discrepancy:e})")]
    InternalInconsistency { what: String, discrepancy: f64 },

    #[error("unsupported number of variables: {0} (1 or 2 supported)")]
    UnsupportedVariables(usize),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("serialization: {0}")]
    Serde(String),
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Serde(e.to_string())
    }
}
