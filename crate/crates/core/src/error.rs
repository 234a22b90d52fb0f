use thiserror::Error;

/// Failure modes shared by every pipeline in the crate.
#[derive(Debug, Clone, Error)]
pub enum Error {
    #[error("point outside chart domain: {0}")]
    Domain(String),

    #[error("invalid metric model: {0}")]
    ModelInvalid(String),

    /// The integrator could not continue; `state` is the last accepted state.
    #[error("integration failure at t = {t}: {reason}")]
    IntegrationFailure {
        t: f64,
        state: Vec<f64>,
        reason: String,
    },

    #[error("event horizon {horizon} exceeded before {what}")]
    HorizonExceeded { horizon: f64, what: String },

    #[error("no convergence after {iterations} iterations (residual {residual:e})")]
    NoConvergence { iterations: usize, residual: f64 },

    #[error("invalid section: {0}")]
    SectionInvalid(String),

    #[error("return failure: {0}")]
    ReturnFailure(String),

    #[error("pinching violation: {0}")]
    PinchingViolation(String),

    #[error("one-form is not closed (residual {residual:e})")]
    NonIntegrableForm { residual: f64 },

    #[error("not a generating function: {0}")]
    NotGenerating(String),

    #[error("precondition failed: {0}")]
    Precondition(String),

    #[error("refused: {0}")]
    Refused(String),

    #[error("internal consistency: {0}")]
    InternalConsistency(String),

    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;
