use thiserror::Error;

/// Errors raised by the numerical core.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("density has zero total mass")]
    ZeroMass,

    #[error("invalid density: {0}")]
    InvalidDensity(String),

    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("quantile positions not strictly increasing at index {index} (gap {gap:e})")]
    NotIncreasing { index: usize, gap: f64 },

    #[error("particle counts differ: {left} vs {right}")]
    MismatchedParticles { left: usize, right: usize },

    #[error("invalid parameter {name}: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error(
        "inner minimization did not converge: gradient sup-norm {grad_norm:e} > {limit:e} after {iterations} iterations"
    )]
    NonConverged {
        grad_norm: f64,
        limit: f64,
        iterations: usize,
    },

    #[error("minimizer oracle failed at step {step}: {source}")]
    StepFailed {
        step: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("time step collapsed to {dt:e} at t = {t}; the state has blown up")]
    CflDegenerate { t: f64, dt: f64 },

    #[error("rate fit needs at least 3 points above the noise floor, got {0}")]
    InsufficientPoints(usize),

    #[error("sweep aborted at omega = {omega}: {source}")]
    SweepAborted {
        omega: f64,
        /// (omega, e(omega)) pairs that finished before the failure.
        completed: Vec<(f64, f64)>,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    /// Innermost cause, looking through step and sweep wrappers.
    pub fn root(&self) -> &Error {
        match self {
            Error::StepFailed { source, .. } | Error::SweepAborted { source, .. } => source.root(),
            other => other,
        }
    }

    pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
