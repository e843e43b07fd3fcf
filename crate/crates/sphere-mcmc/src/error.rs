pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("state dimension must be at least 2, got {0}")]
    InvalidDimension(usize),

    #[error("dimension mismatch: {0} vs {1}")]
    DimensionMismatch(usize, usize),

    #[error("covariance is not symmetric positive definite: {0}")]
    NotPositiveDefinite(String),

    #[error("vector is not unit norm (|norm - 1| = {0:.3e})")]
    NotUnitNorm(f64),

    #[error("invalid parameter {name}: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("slice shrinkage did not terminate within {0} tries")]
    ShrinkageStalled(u32),

    #[error("non-finite value for functional `{name}` at step {step}: state = {state:?}")]
    NonFiniteFunctional {
        name: String,
        step: usize,
        state: Vec<f64>,
    },

    #[error("cache i/o: {0}")]
    Io(#[from] std::io::Error),

    #[error("cache sidecar: {0}")]
    Sidecar(String),
}
