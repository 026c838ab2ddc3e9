use thiserror::Error;

/// Errors raised by the library.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("point lives on the {found} manifold, system expects {expected}")]
    ManifoldMismatch {
        expected: &'static str,
        found: &'static str,
    },

    #[error("disk point has |zeta| = {0}, must be strictly below 1")]
    OutsideDisk(f64),

    #[error("generator {generator} is not defined for {system}")]
    IncompatibleGenerator { generator: String, system: String },

    #[error("rotation axis has norm {0}, expected a unit vector")]
    NonUnitAxis(f64),

    #[error("basis truncated too early: tail ratio {ratio:.3e} at cutoff {cutoff}")]
    TruncationInadequate { cutoff: usize, ratio: f64 },

    #[error("vectors have dimensions {0} and {1}")]
    DimensionMismatch(usize, usize),

    #[error("states are orthogonal to working precision (|overlap| = {0:.3e})")]
    OrthogonalStates(f64),

    #[error("samples {index} and {next} are orthogonal to working precision", next = index + 1)]
    OrthogonalNeighbors { index: usize },

    #[error("a pair of triangle vertices is orthogonal to working precision")]
    OrthogonalPair,

    #[error("curve needs at least {needed} samples, got {got}")]
    TooFewSamples { needed: usize, got: usize },

    #[error("curve parameter must be strictly increasing (sample {0})")]
    NonIncreasingParameter(usize),

    #[error("closed curve does not return to its initial ray (|overlap| = {0})")]
    CurveNotClosed(f64),

    #[error("polyline is not closed")]
    OpenPolyline,

    #[error("value {value} outside the attainable range [{lo}, {hi}]")]
    OutOfRange { value: f64, lo: f64, hi: f64 },

    #[error("seed is a fixed point of the generator; the orbit degenerates to a point")]
    FixedPoint,

    #[error("orbit does not close after the declared period (distance {0:.3e})")]
    OrbitNotClosed(f64),

    #[error("operation requires a closed orbit")]
    OpenOrbit,

    #[error("profile has several separated maxima at {maxima:?}")]
    NotUnimodal { maxima: Vec<(f64, f64)> },

    #[error("not converged: {0}")]
    NotConverged(String),

    #[error("refinement sequence does not converge: {0}")]
    NonConvergent(String),

    #[error("geodesic endpoints coincide or are antipodal")]
    DegenerateEndpoints,

    #[error("unsupported: {0}")]
    Unsupported(String),
}

pub type Result<T> = std::result::Result<T, Error>;
