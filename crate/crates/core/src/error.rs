use thiserror::Error;

/// Crate-wide error type.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("grid mismatch between operands")]
    GridMismatch,

    #[error("matrix is not usable as SPD: {0}")]
    NotSpd(String),

    #[error("linear solver did not converge after {iterations} iterations (relative residual {residual:.3e})")]
    SolverFailure { iterations: usize, residual: f64 },

    #[error("power iteration stagnated after {0} iterations")]
    PowerIterationStagnation(usize),

    #[error("ellipticity violation: {0}")]
    Ellipticity(String),

    #[error(
        "grid does not resolve epsilon = {eps}: h = {h:.3e} exceeds eps/16; use at least n = {suggested_n} cells per axis"
    )]
    UnderResolved { eps: f64, h: f64, suggested_n: usize },

    #[error("a reference operator is required for dual norms")]
    MissingReferenceOperator,

    #[error("state cloud is empty")]
    EmptyCloud,

    #[error("numerical blow-up: {0}")]
    BlowUp(String),

    #[error("rate fit rejected: {0}")]
    Fit(String),

    #[error("cover construction: {0}")]
    Cover(String),

    #[error("cardinality cap {cap} exceeded at level {level}; reachable k = {reachable}")]
    CardinalityCap { cap: usize, level: usize, reachable: usize },

    #[error("configuration invalid:\n{}", .0.join("\n"))]
    Config(Vec<String>),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
