use thiserror::Error;

/// Errors produced by the numerical core.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// An argument violates the precondition of the operation it feeds.
    #[error("invalid {name}: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    /// The post-selection normalization cancelled to (numerically) zero.
    #[error("degenerate post-selection: normalization {denominator:e} is below {threshold:e}")]
    DegeneratePostSelection { denominator: f64, threshold: f64 },

    /// A quadrature integrand produced NaN or infinity.
    #[error("non-finite integrand value {value} at omega = {omega}")]
    NonFiniteIntegrand { omega: f64, value: f64 },

    /// Bracketed root finding could not find a sign change.
    #[error("no sign change in bracket [{lo:e}, {hi:e}]")]
    NoBracket { lo: f64, hi: f64 },

    /// The returned stationary point is not a local maximum.
    #[error("stationary point s = {s:e} is not a local SNR maximum")]
    NotAMaximum { s: f64 },

    /// The weak-coupling expansion was requested outside its validity range.
    #[error("s = {s} is outside the weak regime (s <= {limit}); use the closed-form SNR instead")]
    OutOfRegime { s: f64, limit: f64 },
}

impl Error {
    pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }

    /// True for precondition violations that can be detected before any computation.
    pub fn is_usage(&self) -> bool {
        matches!(
            self,
            Error::InvalidParameter { .. } | Error::OutOfRegime { .. }
        )
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
