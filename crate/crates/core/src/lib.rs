//! Bandit algorithms that interpolate between regret minimization and
//! best-arm identification.
//!
//! The crate is split along the same lines as the maths:
//!
//! - [`concentration`]: confidence radii, peeling constants, the failure
//!   probability inflation `δ̃`, closed-form decision-time and regret bounds and
//!   the numeric sample-size solver.
//! - [`bandit`]: iid policies (ETC, UCB_α, ETC') as explicit
//!   select → observe → check state machines.
//! - [`unit`]: the non-iid unit model where allocated units keep emitting noisy
//!   rewards, with mean-of-means estimation, ETC-MM, UCB-MM_α and the
//!   static-population tests.
//! - [`sim`]: the Monte Carlo harness that replicates trajectories, aggregates
//!   them over δ-grids and checks empirical coverage.

pub mod bandit;
pub mod concentration;
pub mod sim;
pub mod unit;

pub use concentration::{Alpha, ConcentrationError, RadiusFamily, RadiusSpec, Variance};
