use thiserror::Error;

/// Errors surfaced by the numerical kernels and phase-space constructors.
#[derive(Debug, Clone, Error)]
pub enum Error {
    #[error("matrix is singular or too ill-conditioned (condition estimate {cond:.3e} > {bound:.3e})")]
    SingularInput { cond: f64, bound: f64 },

    #[error("matrix is not positive definite (pivot {pivot:.3e} at index {index})")]
    NotPositiveDefinite { pivot: f64, index: usize },

    #[error("matrix is not Hermitian (deviation {dev:.3e})")]
    NotHermitian { dev: f64 },

    #[error("matrix is not unitary (deviation {dev:.3e})")]
    NotUnitary { dev: f64 },

    #[error("matrix is not upper triangular with positive diagonal")]
    NotUpperPositive,

    #[error("eigenvalue collision: minimal angular gap {gap:.3e} below margin {margin:.3e}")]
    EigenvalueCollision { gap: f64, margin: f64 },

    #[error("path step too large for eigenframe continuation ({step:.3e} > {max:.3e})")]
    StepTooLarge { step: f64, max: f64 },

    #[error("index out of range: {0}")]
    IndexOutOfRange(String),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("not a point of the constrained phase space: smallest eigenvalue {min_eig:.3e} of the candidate Lax matrix is not positive")]
    LaxNotPositive { min_eig: f64 },

    #[error("diagonal unitary is not regular: minimal angle gap {gap:.3e} below margin {margin:.3e}")]
    NotRegular { gap: f64, margin: f64 },

    #[error("gauge fixing impossible: spin column sum {index} has modulus {modulus:.3e}")]
    ZeroColumnSum { index: usize, modulus: f64 },

    #[error("torus moment map deviates from the required value (residual {residual:.3e})")]
    PhiConstraint { residual: f64 },

    #[error("spectral gap condition violated: {0}")]
    SpectralGap(String),

    #[error("leading spin vector must have positive entries (entry {index} = {value:.3e})")]
    NonPositiveLeadingSpin { index: usize, value: f64 },

    #[error("particle collision: minimal position gap {gap:.3e} below margin {margin:.3e}")]
    Collision { gap: f64, margin: f64 },

    #[error("potential evaluated too close to a pole (distance {dist:.3e})")]
    PotentialPole { dist: f64 },

    #[error("point lies outside the open unit ball (|z|^2 = {norm_sq:.6})")]
    BallBoundary { norm_sq: f64 },

    #[error("step size {h:.3e} exceeds the allowed maximum {max:.3e}")]
    StepSize { h: f64, max: f64 },

    #[error("too few samples: got {got}, need at least {need}")]
    TooFewSamples { got: usize, need: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("sampling failed after {tries} attempts: {what}")]
    SamplingFailed { tries: usize, what: String },
}

pub type Result<T> = std::result::Result<T, Error>;
