use thiserror::Error;

/// Errors raised by the simulation, analysis and tuning modules.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("singular mean-field denominator (|D| = {magnitude:e})")]
    SingularDenominator { magnitude: f64 },
    #[error("peak coupling amplitude must be positive, got {0}")]
    NonPositiveAmplitude(f64),
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },
    #[error("no eigenvalue crossing found in the schedule domain")]
    NoGapFound,
    #[error("integrator could not meet the requested tolerance at t = {t} (step {step:e})")]
    ToleranceNotMet { t: f64, step: f64 },
    #[error("unphysical moment state at t = {t}: {reason}")]
    UnphysicalState { t: f64, reason: String },
    #[error("sideband cooling is unstable: G^2 = {g2} >= {bound}")]
    Unstable { g2: f64, bound: f64 },
    #[error("Fock space dimension {dim} exceeds the guard of {max}")]
    DimensionGuard { dim: usize, max: usize },
    #[error("population {population:e} in the top Fock level of mode {mode} at t = {t}")]
    TruncationLeak {
        mode: char,
        population: f64,
        t: f64,
    },
    #[error("evaluation budget of {0} exhausted")]
    BudgetExhausted(usize),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter {
        name,
        reason: reason.into(),
    }
}
