//! Monte Carlo harness: replicated runs, aggregation over δ-grids, coverage
//! checks and comparison with the theoretical bounds.
//!
//! Every random stream is seeded from the master seed through
//! [`derive_seed`], keyed by what the stream is for, the δ index, the
//! replication index and (for policy-specific randomness, or when common
//! random numbers are off) the policy. Replications therefore never share
//! state, and results do not depend on how they are spread over threads.

mod compare;
mod config;
#[cfg(test)]
mod properties;
mod run;
mod seed;
mod sweep;
mod verify;

pub use compare::{compare_to_bounds, BoundComparison};
pub use config::{ExperimentConfig, PolicySpec, Setting, TieBreakMode};
pub use run::{run_one, ExperimentOutcome};
pub use seed::{derive_seed, mix, policy_tag, StreamKind};
pub use sweep::{
    aggregate, sweep, sweep_outcomes, with_threads, write_csv, write_json, AggregateRow, Quantile, SweepResult,
    CSV_HEADER, VERSION,
};
pub use verify::{verify_concentration, CoverageConfig, CoverageReport};

use thiserror::Error;

use crate::bandit::BanditError;
use crate::concentration::ConcentrationError;
use crate::unit::UnitError;

#[derive(Debug, Error)]
pub enum SimError {
    #[error("config error: {0}")]
    Config(String),
    #[error(transparent)]
    Bandit(#[from] BanditError),
    #[error(transparent)]
    Unit(#[from] UnitError),
    #[error(transparent)]
    Concentration(#[from] ConcentrationError),
    #[error("thread pool: {0}")]
    ThreadPool(String),
}

impl SimError {
    /// Whether the error comes from the configuration rather than the run.
    pub fn is_config(&self) -> bool {
        matches!(self, SimError::Config(_))
    }
}
