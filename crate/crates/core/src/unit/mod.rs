//! The unit setting: each allocated unit keeps emitting one reward per step,
//! `r_{u,t} = r_u + ε_{u,t}`, for the rest of the test.
//!
//! Only running per-unit statistics are stored, never the full sample
//! history.

mod population;
mod source;
mod static_pop;
mod world;

pub use population::{UnitPopulation, UnitRecord};
pub use source::{GaussianUnits, UnitSource};
pub use static_pop::{static_anytime_test, static_fixed_horizon_test, StaticOutcome, StaticWorld};
pub use world::{
    mm_index, UnitDecision, UnitPolicyKind, UnitStepRecord, UnitWorld, UnitWorldConfig,
};

use thiserror::Error;

use crate::concentration::ConcentrationError;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum UnitError {
    #[error("expected {expected} samples, one per unit, got {got}")]
    SampleCountMismatch { expected: usize, got: usize },
    #[error("populations must have equal sizes, got {a} and {b}")]
    UnequalPopulations { a: usize, b: usize },
    #[error("population is empty")]
    EmptyPopulation,
    #[error("world already decided; no further steps can be taken")]
    Terminal,
    #[error("invalid unit configuration: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Concentration(#[from] ConcentrationError),
}
