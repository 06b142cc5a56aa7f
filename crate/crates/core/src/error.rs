use thiserror::Error;

/// Every failure the solver can report. The CLI maps these onto exit codes.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum BisolveError {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("admissibility rejected: {0}")]
    Admissibility(String),
    #[error("no admissible q for theta = {theta}: interval ({lo}, {hi}) is empty")]
    Infeasible { theta: f64, lo: f64, hi: f64 },
    #[error("sandwich bound violated at s = {s}: {detail}")]
    Verification { s: f64, detail: String },
    #[error("no xi0 with G(xi0) > 0 on (0, {s_max}]")]
    Xi0NotFound { s_max: f64 },
    #[error("shooting bracket not found on [{lo}, {hi}]")]
    BracketNotFound { lo: f64, hi: f64 },
    #[error("integration failure at r = {radius}: {reason}")]
    IntegrationFailure { radius: f64, reason: String },
    #[error("insufficient support: profile vanishes before r = {radius}")]
    InsufficientSupport { radius: f64 },
    #[error("nonconvergence after {iterations} iterations (last gradient norm {residual:e})")]
    Nonconvergence { iterations: usize, residual: f64 },
    #[error("mountain-pass level increased from {from} to {to}")]
    LevelIncrease { from: f64, to: f64 },
    #[error("theta schedule exhausted after {stages} stages")]
    ScheduleExhausted { stages: usize },
}

pub type Result<T> = std::result::Result<T, BisolveError>;
