use thiserror::Error;

/// Errors raised by the numerical core.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum SipoError {
    #[error("target dose has no strictly positive entry")]
    AllZeroTarget,
    #[error("band width must be nonnegative, got {0}")]
    BandWidthNegative(i64),
    #[error("shape mismatch: expected length {expected}, got {actual}")]
    ShapeMismatch { expected: usize, actual: usize },
    #[error("kernel extent {kernel:?} exceeds grid extent {grid:?}")]
    KernelTooLarge { kernel: [usize; 3], grid: [usize; 3] },
    #[error("invalid kernel: {0}")]
    InvalidKernel(String),
    #[error("invalid geometry: {0}")]
    InvalidGeometry(String),
    #[error("invalid material parameters: {0}")]
    InvalidMaterial(String),
    #[error("response outside the invertible range at {} voxel(s), first index {}", .indices.len(), .indices.first().copied().unwrap_or(0))]
    OutOfInvertibleRange { indices: Vec<usize> },
    #[error("target dose is not strictly positive on the gel region at {} voxel(s)", .indices.len())]
    NonPositiveTargetDose { indices: Vec<usize> },
    #[error("dose is not strictly positive on the gel region")]
    NonPositiveDose,
    #[error("gel region is empty")]
    EmptyGel,
    #[error("band region is empty")]
    EmptyBand,
    #[error("invalid objective weights w1={w1}, w2={w2}")]
    InvalidWeights { w1: f64, w2: f64 },
    #[error("invalid tolerance window: {0}")]
    InvalidTolerance(String),
    #[error("threshold dose must be strictly positive, got {0}")]
    NonPositiveThreshold(f64),
    #[error("numerical breakdown at iteration {0}")]
    NumericalBreakdown(usize),
    #[error("dense reference solver limited to {limit} matrix entries, problem has {entries}")]
    SizeLimitExceeded { entries: usize, limit: usize },
    #[error("inner solver failed: {0}")]
    InnerSolverFailure(String),
    #[error("fractional iteration did not converge within {0} iterations")]
    NonConvergence(usize),
    #[error("calibration denominator is zero")]
    DegenerateDenominator,
    #[error("invalid bracket ({lo}, {hi})")]
    BracketInvalid { lo: f64, hi: f64 },
    #[error("scale factor must be positive, got {0}")]
    NonPositiveAlpha(f64),
    #[error("phantom geometry out of bounds: {0}")]
    GeometryOutOfBounds(String),
    #[error("phantom level {0} lies outside the invertible response range")]
    LevelOutOfRange(f64),
    #[error("missing required parameter {0}")]
    MissingParameter(&'static str),
    #[error("unknown {kind} '{name}' (available: {available})")]
    UnknownStrategy {
        kind: &'static str,
        name: String,
        available: String,
    },
}

pub type Result<T, E = SipoError> = std::result::Result<T, E>;
