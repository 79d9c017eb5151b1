use thiserror::Error;

/// Errors shared by all modules.
#[derive(Debug, Error)]
pub enum CqError {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("matrix is not Hermitian: max |A - A†| entry = {max_asym:.3e}")]
    NotHermitian { max_asym: f64 },

    #[error("matrix is not a density operator: {0}")]
    NotDensity(String),

    #[error("matrix is not a projector: idempotency residual {residual:.3e}")]
    NotProjector { residual: f64 },

    #[error("eigensolver did not converge: off-diagonal residual {residual:.3e} after {sweeps} sweeps")]
    EigNonConvergence { residual: f64, sweeps: usize },

    #[error("result dimension {dim} exceeds cap {cap}")]
    DimensionCap { dim: usize, cap: usize },

    #[error("solver did not converge: first-order residual {residual:.3e} after {iterations} iterations")]
    SolverNonConvergence { residual: f64, iterations: usize },

    #[error("empty search space: {0}")]
    EmptySearchSpace(String),
}
