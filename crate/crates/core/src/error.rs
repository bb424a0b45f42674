use thiserror::Error;

/// Errors raised by the landscape toolkit.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("matrix has non-finite entries")]
    NonFinite,

    #[error("matrix is not unitary (defect {defect:.3e} > {tol:.1e})")]
    NotUnitary { defect: f64, tol: f64 },

    #[error("unitary is not in the spin-1 rotation set (best residual {residual:.3e})")]
    NotInR { residual: f64 },

    #[error("invalid measurement: {0}")]
    InvalidSpec(String),

    #[error("invalid density matrix: {0}")]
    InvalidDensity(String),

    #[error("coordinate {name} = {value} outside chart domain")]
    OutOfRange { name: String, value: f64 },

    #[error("invalid chart: {0}")]
    InvalidChart(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("start {start} did not converge (gradient norm {grad_norm:.3e})")]
    NoConvergence { start: usize, grad_norm: f64 },

    #[error("null-direction probe inconclusive (fit residual {residual:.3})")]
    InconclusiveProbe { residual: f64 },
}

pub type Result<T> = std::result::Result<T, Error>;
