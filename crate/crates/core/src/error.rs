use thiserror::Error;

/// Numerical failures raised by the library.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("invalid schedule: {0}")]
    InvalidSchedule(String),

    /// The integrator could not continue; `t` is the last time reached with an accepted state.
    #[error("integration failed at t = {t}: {reason}")]
    StepFailure { t: f64, reason: String },

    #[error("monodromy is not elliptic (trace = {trace})")]
    NonElliptic { trace: f64 },

    #[error("monodromy is too close to parabolic (2 - |trace| = {margin:e})")]
    NearParabolic { margin: f64 },

    #[error("newton iteration did not converge after {iterations} iterations (residual {residual:e})")]
    NoConvergence { iterations: usize, residual: f64 },

    #[error("singular newton jacobian (|det| = {det:e}): fluctuation map near parametric resonance")]
    SingularJacobian { det: f64 },

    #[error("{0}")]
    Numeric(String),
}

pub type Result<T> = std::result::Result<T, Error>;
