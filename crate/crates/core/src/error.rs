use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("grid point count {0} must be a power of two and at least 16")]
    GridSize(usize),
    #[error("grid length must be positive and finite, got {0}")]
    GridLength(f64),
    #[error("field has {got} samples but the grid has {expected}")]
    SampleCount { expected: usize, got: usize },
    #[error("non-finite sample in {0}")]
    NonFinite(&'static str),
    #[error("symbol `{name}` is not finite at wavenumber {k}")]
    SymbolNotFinite { name: String, k: f64 },
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },
    #[error("homogeneous Sobolev norm of order {s} requires a mean-free field")]
    NonzeroMean { s: f64 },
    #[error("fields live on different grids")]
    GridMismatch,
    #[error("NaN detected at t = {t}; last healthy record at t = {last_healthy_t}")]
    Blowup { t: f64, last_healthy_t: f64 },
    #[error("trajectory is missing {0}")]
    MissingSamples(String),
    #[error("sampling too coarse: {0}")]
    RefineSampling(String),
    #[error("quadrature budget exceeded: {points} points requested, budget {budget}")]
    OverBudget { points: u128, budget: u128 },
    #[error("downsampling loss {loss:.3e} exceeds tolerance {tol:.1e}")]
    DownsamplingLoss { loss: f64, tol: f64 },
    #[error("infeasible: {0}")]
    Infeasible(String),
}

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter {
        name,
        reason: reason.into(),
    }
}
