use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid model: {0}")]
    InvalidModel(String),

    #[error("invalid order parameter: {0}")]
    InvalidOrderParam(String),

    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    /// Quadrature probes carry non-negligible weight beyond the trusted
    /// linear-extension margin; enlarge `x_max`.
    #[error("grid too small: {0}")]
    GridTooSmall(String),

    /// `PdeSolution::eval` was asked for a time that is not stored.
    #[error("no stored slab time at t = {0}")]
    UnknownSlabTime(f64),

    /// An Euler step would be drift-dominated; increase the step count.
    #[error("step count too small: {0}")]
    StepCountTooSmall(String),

    #[error("budget exceeded: {0}")]
    BudgetExceeded(String),

    #[error("domain error: {0}")]
    Domain(String),
}

pub type Result<T> = std::result::Result<T, Error>;
