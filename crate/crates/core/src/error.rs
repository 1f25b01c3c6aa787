use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// An argument lies outside the domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// The Fock-space cutoff is too small for the requested state or evolution.
    #[error("truncation error: {what} (lost mass {mass:e})")]
    Truncation { what: String, mass: f64 },

    /// Adaptive integration could not meet its tolerance.
    #[error("integrator failure at t = {t}: {reason} (step {step:e}, {steps} steps taken)")]
    Integrator {
        t: f64,
        step: f64,
        steps: usize,
        reason: String,
    },

    /// A documented precondition of the operation does not hold.
    #[error("precondition violated: {0}")]
    Precondition(String),

    /// A purification step whose postselection weight vanished.
    #[error("degenerate step: success weight {0:e}")]
    DegenerateStep(f64),

    /// The reference state for a fidelity is the zero vector.
    #[error("undefined fidelity: {0}")]
    UndefinedFidelity(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },

    /// An iteration that did not reach its stopping condition.
    #[error("no convergence after {0} iterations")]
    NoConvergence(usize),
}

impl Error {
    pub fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub fn precondition(msg: impl Into<String>) -> Self {
        Error::Precondition(msg.into())
    }

    /// True for failures of the numerics (truncation, integration, degenerate
    /// postselection) rather than of the caller's input.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::Truncation { .. }
                | Error::Integrator { .. }
                | Error::DegenerateStep(_)
                | Error::NoConvergence(_)
        )
    }
}
