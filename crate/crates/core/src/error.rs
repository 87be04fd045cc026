use thiserror::Error;

/// Errors raised by the form, geometry and verification layers.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("incompatible chart domains")]
    IncompatibleDomains,
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("invalid chart domain: {0}")]
    InvalidDomain(String),
    #[error("invalid multi-index {0:?} for a chart of dimension {1}")]
    InvalidMultiIndex(Vec<usize>, usize),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("metric is not positive definite at {0:?}")]
    MetricNotPositiveDefinite(Vec<f64>),
    #[error("frame is not orthonormal at {0:?} (defect {1:.3e})")]
    FrameNotOrthonormal(Vec<f64>, f64),
    #[error("frame change is not special orthogonal at {0:?}")]
    NotSpecialOrthogonal(Vec<f64>),
    #[error("Euler form requires even rank (got {0})")]
    OddRank(usize),
    #[error("index {0} out of range (limit {1})")]
    IndexOutOfRange(usize, usize),
    #[error("degree mismatch: form of degree {form} on a domain of dimension {dim}")]
    DegreeMismatch { form: usize, dim: usize },
    #[error("overlapping chart ranges in patch {0}")]
    OverlappingCharts(usize),
    #[error("vector field vanishes on boundary at {0:?}")]
    VanishingBoundaryField(Vec<f64>),
    #[error("section is not unit length at {0:?} (norm {1})")]
    NotUnit(Vec<f64>, f64),
    #[error("near-singular Jacobian (det {0:.3e}); use degree integral")]
    SingularJacobian(f64),
    #[error("degree not resolved; refine quadrature (value {value}, residual {residual:.3e})")]
    DegreeNotResolved { value: f64, residual: f64 },
    #[error("field vanishes inside the isolation ball of the zero at {0:?}")]
    NotIsolated(Vec<f64>),
    #[error("overlapping isolation balls around {0:?} and {1:?}")]
    OverlappingZeros(Vec<f64>, Vec<f64>),
    #[error("geometry {0} does not provide {1}")]
    Unsupported(String, &'static str),
    #[error("scenario configuration: {0}")]
    Config(String),
}

pub type Result<T> = std::result::Result<T, Error>;
