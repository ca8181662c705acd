use thiserror::Error;

/// Errors produced by the simulation engine.
#[derive(Debug, Error)]
pub enum Error {
    /// A parameter violates a precondition. The message names the invariant.
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("shape mismatch: expected {expected} entries, got {actual}")]
    ShapeMismatch { expected: usize, actual: usize },

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    /// Two adjacent markers coincide, so the gap direction is undefined.
    #[error("degenerate geometry: markers {gap} and {next} of the fiber coincide", next = .gap + 1)]
    DegenerateGeometry { gap: usize },

    #[error("singular banded system at pivot {0}")]
    SingularSystem(usize),

    #[error("simulation blew up at step {step} (t = {time:e} s): {reason}")]
    BlowUp {
        step: u64,
        time: f64,
        reason: String,
    },

    #[error("Newton iteration did not converge in {iterations} iterations (residuals: {residuals:?})")]
    NewtonDiverged {
        iterations: usize,
        residuals: Vec<f64>,
    },

    #[error("malformed configuration: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// True for failures caused by the numerics (blow-up, non-convergence)
    /// rather than by bad input.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::BlowUp { .. }
                | Error::NewtonDiverged { .. }
                | Error::SingularSystem(_)
                | Error::DegenerateGeometry { .. }
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidParameter(msg.into())
}
