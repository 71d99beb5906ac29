use thiserror::Error;

/// Errors shared across the phase-space, channel, sampling and estimator layers.
#[derive(Error, Debug, Clone, PartialEq)]
pub enum Error {
    #[error("invalid dimension: expected {expected}, got {got}")]
    InvalidDimension { expected: usize, got: usize },

    #[error("matrix is not symplectic: max deviation {max_dev:e} exceeds {tol:e}")]
    SymplecticViolation { max_dev: f64, tol: f64 },

    #[error("ill-conditioned gate: symplectic matrix is numerically singular")]
    IllConditionedGate,

    #[error("degenerate sampling kernel: linear coefficient a = 0")]
    DegenerateKernel,

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("estimator not applicable: {0}")]
    EstimatorInapplicable(String),

    #[error("near-Gaussian regime violated at layer {layer}: {detail}")]
    RegimeViolation { layer: usize, detail: String },

    #[error("divergent variance: eta = 1 leaves the case-2 sampling measure unnormalizable")]
    DivergentVariance,

    #[error("phase point out of observable support: mode {mode} must sit at the origin")]
    OutOfSupport { mode: usize },

    #[error("unsupported observable: {0}")]
    NotImplementedObservable(String),

    #[error("eta = {eta} is outside (0,1); contraction formulas are undefined at the boundary")]
    BoundaryRegime { eta: f64 },

    #[error("inconsistent moment sequence: {0}")]
    InvalidMoments(String),

    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("invalid Fock cutoff {0}: need at least 2")]
    InvalidCutoff(usize),

    #[error("thermal ancilla cutoff too small: tail mass {tail:e} exceeds {tol:e}, need cutoff >= {required}")]
    IncreaseCutoff { tail: f64, tol: f64, required: usize },
}

pub type Result<T> = std::result::Result<T, Error>;
