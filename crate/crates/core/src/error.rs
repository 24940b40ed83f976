use thiserror::Error;

/// Errors raised by the harmonic-measure library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("empty set")]
    EmptySet,

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("invalid dimension {0}: the lattice needs d >= 2")]
    InvalidDimension(usize),

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("Green's function infinite; use potential kernel")]
    GreenInfinite,

    #[error("potential kernel is only defined here for d = 2 (got d = {0})")]
    KernelDimension(usize),

    #[error("no subcube structure (cube level {0} < 2)")]
    NoSubcubeStructure(u32),

    #[error("l̄ < 2 (branching l = {0}, need l >= 12)")]
    LayerCountTooSmall(u64),

    #[error("q too small for this cube (side {side}, q = {q})")]
    QTooSmall { side: u64, q: f64 },

    #[error("start point {0} lies outside the guard box")]
    StartOutsideGuard(String),

    #[error("target subset is not contained in the stopping set")]
    TargetNotInStopping,

    #[error("zero hit mass")]
    ZeroHitMass,

    #[error("point {0} is not a boundary point of the set")]
    NotBoundaryPoint(String),

    #[error("cantor construction: interval becomes empty at depth {depth}")]
    CantorEmpty { depth: usize },

    #[error("unknown family `{0}`")]
    UnknownFamily(String),

    #[error("no convergence after {doublings} box doublings; tv trace {trace:?}")]
    NoConvergence { doublings: usize, trace: Vec<f64> },

    #[error("linear solver stalled: residual {residual:e} after {iterations} iterations")]
    SolverStalled { iterations: usize, residual: f64 },

    #[error("singular kernel matrix")]
    SingularSystem,

    #[error("config error at `{path}`: {message}")]
    Config { path: String, message: String },

    #[error("parse error: {0}")]
    Parse(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter { name, reason: reason.into() }
}
