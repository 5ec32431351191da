use thiserror::Error;

use crate::expr::ParseError;
use crate::geometry::Point2;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// The field produced a non-finite value.
    #[error("field `{field}` is not defined at ({x}, {y})", x = .at.x, y = .at.y)]
    Domain { field: String, at: Point2 },

    #[error("flow stagnated at ({x}, {y}): speed {speed:e} below floor", x = .at.x, y = .at.y)]
    Stagnation { at: Point2, speed: f64 },

    #[error("step size underflow at arclength {arclength} (step {step:e})")]
    StepUnderflow { arclength: f64, step: f64 },

    #[error("hypothesis violated: {0}")]
    HypothesisViolated(String),

    #[error("field is not incompressible: stream-function closure error {closure:e} exceeds {tolerance:e}")]
    NotIncompressible { closure: f64, tolerance: f64 },

    #[error(transparent)]
    Parse(#[from] ParseError),

    #[error("expression is not differentiable: contains `abs`")]
    NonDifferentiable,

    #[error("parameter `{0}` is not bound")]
    UnboundParameter(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("no level with positive length found in the scan range")]
    Degenerate,

    #[error("internal consistency: {0}")]
    InternalConsistency(String),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }

    /// True for failures of the numerics rather than of the inputs.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::Domain { .. }
                | Error::Stagnation { .. }
                | Error::StepUnderflow { .. }
                | Error::Degenerate
                | Error::InternalConsistency(_)
        )
    }
}
