use thiserror::Error;

/// Errors produced anywhere in the crate.
#[derive(Debug, Error)]
pub enum Error {
    /// An orbit landed on (or numerically indistinguishably close to) a
    /// branch boundary or pole, so the next iterate is undefined.
    #[error("orbit hit a singular point after {step} step(s): x = {x}")]
    SingularOrbit { x: f64, step: usize },

    /// Preimage query exactly at a branch-image endpoint.
    #[error("preimage query at a branch-image endpoint: y = {0}")]
    BoundaryPoint(f64),

    /// Preimage-tree depth request beyond the engine limit.
    #[error("preimage depth {requested} exceeds the engine limit {limit}")]
    DepthExceeded { requested: usize, limit: usize },

    /// A mean-zero density was required.
    #[error("observable is not mean-zero: mu(g) = {0:e}")]
    NotMeanZero(f64),

    /// A density with nonzero mean was required (for normalization).
    #[error("density {id} has mean too close to zero: mu = {mu:e}")]
    ZeroMean { id: String, mu: f64 },

    /// The requested estimation method cannot handle the given inputs.
    #[error("method {method} not admissible here: {reason}")]
    MethodMismatch {
        method: &'static str,
        reason: String,
    },

    /// Adaptive quadrature ran out of its evaluation budget before
    /// reaching the requested tolerance.
    #[error("quadrature budget of {budget} evaluations exceeded ({context})")]
    QuadratureBudget { budget: usize, context: String },

    /// Lattice projection failed on a specific cell.
    #[error("lattice projection failed on cell {cell}: {reason}")]
    CellQuadrature { cell: i64, reason: String },

    /// An exact pullback produced too many interval components.
    #[error("interval pullback exceeded {limit} components")]
    IntervalBlowup { limit: usize },

    /// Map construction was rejected (bad branch data, failed
    /// measure-preservation check, ...).
    #[error("map construction rejected: {0}")]
    Construction(String),

    /// An id did not resolve against a registry.
    #[error("unknown id {id:?}; nearest matches: {}", candidates.join(", "))]
    UnknownId { id: String, candidates: Vec<String> },

    /// Scenario file could not be parsed or validated.
    #[error("scenario error: {0}")]
    Scenario(String),

    /// A precondition of an operation failed.
    #[error("precondition failed: {0}")]
    Precondition(String),

    /// An exhaustive family needs more ladder scales.
    #[error("family needs at least {need} ladder scales, got {got}")]
    LadderTooShort { need: usize, got: usize },

    /// Ladder cache file exists but fails its checksum.
    #[error("cache file corrupt: {0}")]
    CacheCorrupt(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
