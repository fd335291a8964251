//! Concentration radii, constants and theoretical bounds.
//!
//! Everything in here is a pure function of its arguments. Logarithms are
//! natural unless a function says otherwise, and every `log n` or `log² n`
//! appearing inside a radius is clamped below at 1 so radii stay finite for
//! `n = 1, 2`.

mod alpha;
mod bounds;
mod constants;
mod radius;
mod sample_size;

pub use alpha::Alpha;
pub use bounds::{
    bound_report_etc_mm, bound_report_iid, bound_report_mm, BoundConstants, BoundReport,
    IidAlgorithm,
};
pub use constants::{
    c_alpha, delta_tilde, peeling_log_constant, peeling_log_constant_bound,
    peeling_sqrt_constant, peeling_sqrt_constant_bound, phi, zeta, DeltaTilde, DeltaTildeBranch,
    ZETA_DEFAULT_TOL,
};
pub use radius::{MmLogScale, RadiusFamily, RadiusSpec, Variance, DEFAULT_UCB_LOG_FACTOR};
pub use sample_size::{
    sample_size_lhs, sample_size_lhs_scaled, solve_sample_size, solve_sample_size_scaled,
    static_sample_bound, SAMPLE_SIZE_LIMIT,
};

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ConcentrationError {
    #[error("{what} is outside its domain: got {value}")]
    Domain { what: &'static str, value: f64 },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("{family:?} radius needs a time argument")]
    MissingTime { family: RadiusFamily },
    #[error("no validity range of the anytime bound contains delta = {delta}")]
    NoValidBranch { delta: f64 },
    #[error("alpha = {alpha} < 1 carries no decision guarantee")]
    NoGuarantee { alpha: f64 },
    #[error("no exact bound is available for {0}")]
    NoExactForm(&'static str),
    #[error("no sample size up to {limit} satisfies the equation")]
    NoConvergence { limit: u64 },
}

pub(crate) fn check_delta(delta: f64) -> Result<(), ConcentrationError> {
    if delta > 0.0 && delta < 1.0 {
        Ok(())
    } else {
        Err(ConcentrationError::Domain { what: "delta", value: delta })
    }
}

pub(crate) fn check_nonnegative(what: &'static str, value: f64) -> Result<(), ConcentrationError> {
    if value >= 0.0 && value.is_finite() {
        Ok(())
    } else {
        Err(ConcentrationError::Domain { what, value })
    }
}

pub(crate) fn check_positive(what: &'static str, value: f64) -> Result<(), ConcentrationError> {
    if value > 0.0 && value.is_finite() {
        Ok(())
    } else {
        Err(ConcentrationError::Domain { what, value })
    }
}

/// `ln x` clamped below at 1.
#[inline]
pub(crate) fn clamped_ln(x: f64) -> f64 {
    x.ln().max(1.0)
}
