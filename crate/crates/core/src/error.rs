use thiserror::Error;

/// Errors raised by the numerical routines.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("singular argument: {0}")]
    Singularity(String),

    #[error("accuracy loss: estimated relative error {estimate:.3e} ({context})")]
    AccuracyLoss { estimate: f64, context: String },

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("near-resonant solve: |F_nu(k)| = {f_nu:.3e}, residual {residual:.3e}")]
    NearResonance { f_nu: f64, residual: f64 },

    #[error("no convergence after {iterations} iterations (last step {last_step:.3e})")]
    Convergence {
        iterations: usize,
        last_step: f64,
        trace: Vec<(f64, f64)>,
    },

    #[error("isolation failed: winding number {winding:.3}")]
    Isolation { winding: f64 },

    #[error("quadrature not converged: relative change {change:.3e} on doubling")]
    Quadrature { change: f64 },

    #[error("plane-wave truncation tail bound {tail_bound:.3e} above tolerance")]
    Truncation { tail_bound: f64 },

    #[error("not found: {0}")]
    NotFound(String),

    #[error("bound inapplicable: {0}")]
    Inapplicable(String),

    #[error("invariant violated: {what} (value {value:.6e})")]
    InvariantViolation { what: String, value: f64 },

    #[error("falsification: margin {margin:.6e} below tolerance for rhs {rhs:.6e}")]
    Falsification { margin: f64, rhs: f64 },
}

impl Error {
    /// True for errors that indicate lost numerical accuracy rather than bad input.
    pub fn is_accuracy(&self) -> bool {
        matches!(
            self,
            Error::AccuracyLoss { .. }
                | Error::NearResonance { .. }
                | Error::Convergence { .. }
                | Error::Isolation { .. }
                | Error::Quadrature { .. }
                | Error::Truncation { .. }
                | Error::NotFound(_)
        )
    }

    pub fn is_falsification(&self) -> bool {
        matches!(
            self,
            Error::Falsification { .. } | Error::InvariantViolation { .. }
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
