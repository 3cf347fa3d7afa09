use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GreenError {
    #[error("step count {k} exceeds configured maximum {max}")]
    Resource { k: usize, max: usize },
    #[error("quadrature did not converge: last refinement changed by {delta:e} (tol {tol:e})")]
    Quadrature { delta: f64, tol: f64 },
    #[error("kernel is singular at the origin")]
    Singular,
    #[error("|z| = {norm} is below the validity threshold {threshold}")]
    Domain { norm: f64, threshold: f64 },
    #[error("displacement {0:?} outside table coverage")]
    TableMiss([i32; 4]),
    #[error("cache file: {0}")]
    Cache(String),
}
