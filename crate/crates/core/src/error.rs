use std::fmt;

use thiserror::Error;

/// Which normal-form assumption an input system violates.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Assumption {
    /// f(0) vanishes.
    F0Zero,
    /// k lies outside 1 ≤ k ≤ l + 1.
    KRange,
    /// k = l + 1, the excluded resonant case.
    KEqualsLPlus1,
}

impl Assumption {
    pub fn code(self) -> &'static str {
        match self {
            Assumption::F0Zero => "f0_zero",
            Assumption::KRange => "k_range",
            Assumption::KEqualsLPlus1 => "k_equals_l_plus_1",
        }
    }
}

impl fmt::Display for Assumption {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let what = match self {
            Assumption::F0Zero => "f(0) must be nonzero",
            Assumption::KRange => "k must satisfy 1 <= k <= l+1",
            Assumption::KEqualsLPlus1 => "k = l+1 is not supported",
        };
        write!(f, "{} ({})", what, self.code())
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("assumption violated: {0}")]
    AssumptionViolation(Assumption),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("leading coefficient has infimum {infimum:e}, not above floor {floor:e}")]
    NonInvertibleLeadingCoefficient { infimum: f64, floor: f64 },

    #[error("inner series has nonzero constant term {0:e}")]
    NonzeroConstantTerm(f64),

    #[error("non-finite value produced in {0}")]
    NonFinite(&'static str),

    #[error("interpolant did not converge below {tol:e} within degree {cap}")]
    InterpolationFailure { tol: f64, cap: usize },

    #[error("quadrature did not reach tolerance: estimate {estimate:e}, requested {requested:e}")]
    QuadratureFailure { estimate: f64, requested: f64 },

    #[error("point |z| = {z:e} lies outside the validated radius {radius:e}")]
    OutOfRadius { z: f64, radius: f64 },

    #[error("order {order} is below the minimum {minimum}")]
    OrderTooLow { order: usize, minimum: usize },

    #[error("order {order} exceeds the available working order {available}")]
    OrderTooHigh { order: usize, available: usize },

    #[error("bracket P + v = {0:e} is not positive")]
    NegativeBracket(f64),

    #[error("matching jacobian {0:e} is degenerate")]
    DegenerateJacobian(f64),

    #[error("no return detected: {0}")]
    NoReturnDetected(String),

    #[error("residuals lie within the noise floor {floor:e}")]
    ResidualBelowNoiseFloor { floor: f64 },
}

impl Error {
    /// Stable machine-readable identifier.
    pub fn code(&self) -> &'static str {
        match self {
            Error::AssumptionViolation(a) => a.code(),
            Error::InvalidInput(_) => "invalid_input",
            Error::NonInvertibleLeadingCoefficient { .. } => "non_invertible_leading_coefficient",
            Error::NonzeroConstantTerm(_) => "nonzero_constant_term",
            Error::NonFinite(_) => "non_finite",
            Error::InterpolationFailure { .. } => "interpolation_failure",
            Error::QuadratureFailure { .. } => "quadrature_failure",
            Error::OutOfRadius { .. } => "out_of_radius",
            Error::OrderTooLow { .. } => "order_too_low",
            Error::OrderTooHigh { .. } => "order_too_high",
            Error::NegativeBracket(_) => "negative_bracket",
            Error::DegenerateJacobian(_) => "degenerate_jacobian",
            Error::NoReturnDetected(_) => "no_return_detected",
            Error::ResidualBelowNoiseFloor { .. } => "residual_below_noise_floor",
        }
    }

    /// Input-validation errors, as opposed to failures of the numerics.
    /// Kept in step with [`ErrorEntry::is_validation`].
    pub fn is_validation(&self) -> bool {
        matches!(
            self,
            Error::AssumptionViolation(_)
                | Error::InvalidInput(_)
                | Error::OrderTooLow { .. }
                | Error::OrderTooHigh { .. }
                | Error::OutOfRadius { .. }
        )
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Serializable `{stage, code, message}` record of an error.
#[derive(Debug, Clone, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ErrorEntry {
    pub stage: String,
    pub code: String,
    pub message: String,
}

impl ErrorEntry {
    pub fn new(stage: &str, err: &Error) -> Self {
        Self {
            stage: stage.to_string(),
            code: err.code().to_string(),
            message: err.to_string(),
        }
    }

    /// Whether the recorded error is an input-validation error.
    pub fn is_validation(&self) -> bool {
        matches!(
            self.code.as_str(),
            "f0_zero" | "k_range" | "k_equals_l_plus_1" | "invalid_input" | "order_too_low" | "order_too_high" | "out_of_radius"
        )
    }
}
