use thiserror::Error;

/// Errors raised by the numeric and statistical routines.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },

    #[error("zero sample variance in column {column}")]
    ZeroVariance { column: usize },

    #[error("matrix is not symmetric (max asymmetry {asymmetry:e})")]
    NotSymmetric { asymmetry: f64 },

    #[error("matrix is not square ({rows}x{cols})")]
    NotSquare { rows: usize, cols: usize },

    #[error("attribute '{attribute}' of node '{node}' has zero sample variance")]
    ConstantAttribute { node: String, attribute: String },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("iteration did not converge after {iterations} iterations")]
    NoConvergence { iterations: usize },

    #[error("matrix has a complex eigenvalue pair ({re} ± {im}i)")]
    ComplexSpectrum { re: f64, im: f64 },

    #[error("matrix is not positive definite (pivot {pivot})")]
    NotPositiveDefinite { pivot: usize },

    #[error("matrix is singular")]
    Singular,

    #[error("matrix is ill-conditioned (condition estimate {condition:e})")]
    IllConditioned { condition: f64 },

    #[error("parameters outside the valid domain: {0}")]
    OutOfDomain(String),

    #[error("within-node correlation |r| = 1 makes the closed form undefined")]
    DegenerateR,

    #[error("empty input")]
    EmptyInput,

    #[error("internal numerical error: {0}")]
    InternalNumerical(String),

    #[error("correlation estimate has magnitude 1")]
    DegenerateCorrelation,

    #[error("insufficient samples: need {needed}, got {got}")]
    InsufficientSamples { needed: usize, got: usize },

    #[error("canonical root {0} outside [0, 1]")]
    RootOutOfRange(f64),

    #[error("non-finite input")]
    NonFiniteInput,

    #[error("p-value {0} outside [0, 1]")]
    InvalidP(f64),

    #[error("FDR level {0} outside (0, 1)")]
    InvalidGamma(f64),

    #[error("invalid degrees of freedom {0}")]
    InvalidDf(f64),

    #[error("covariance matrix is singular")]
    SingularCovariance,

    #[error("networks have different node sets")]
    NodeSetMismatch,

    #[error("threshold {0} outside (0, 1)")]
    InvalidThreshold(f64),

    #[error("contributions sum to {0}, expected 1")]
    UnnormalizedContrib(f64),

    #[error("invalid counts: {0}")]
    InvalidCounts(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),
}

impl Error {
    /// True for failures of the numeric kernel rather than of the caller's data.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::NoConvergence { .. }
                | Error::ComplexSpectrum { .. }
                | Error::NotPositiveDefinite { .. }
                | Error::Singular
                | Error::IllConditioned { .. }
                | Error::InternalNumerical(_)
                | Error::SingularCovariance
        )
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
