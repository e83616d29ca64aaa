use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("non-finite field")]
    NonFinite,

    #[error("bad magic")]
    BadMagic,

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("truncated payload: expected {expected} bytes, found {found}")]
    Truncated { expected: usize, found: usize },

    #[error("image format error: {0}")]
    ImageFormat(String),

    #[error("manifest error: {0}")]
    Manifest(String),

    #[error("nonpositive monitor at node {node} (value {value})")]
    NonpositiveMonitor { node: usize, value: f64 },

    #[error("folded target: minimum Jacobian determinant {min_jacobian}")]
    FoldedTarget { min_jacobian: f64 },

    #[error("invalid monitor: {0}")]
    InvalidMonitor(String),

    #[error("not in H1_0 surrogate: boundary value {value} at node {node}")]
    NotZeroBoundary { node: usize, value: f64 },

    #[error("boundary not fixed at node {node}")]
    BoundaryNotFixed { node: usize },

    #[error("solver did not converge after {iterations} iterations (relative residual {residual:e})")]
    SolverDiverged { iterations: usize, residual: f64 },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}
