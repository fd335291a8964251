//! iid bandit policies as explicit state machines.
//!
//! A policy is driven by a strict cycle: [`IidPolicy::select_arm`], then
//! [`IidPolicy::observe`] with the reward of that arm, then
//! [`IidPolicy::check_decision`]. [`run_policy`] wraps the cycle.

mod env;
mod policy;

pub use env::{GaussianArms, RewardSource};
pub use policy::{
    dominated_arms, separated_winner, IidPolicy, PolicyConfig, PolicyKind, TieBreak,
    DEFAULT_INIT_PULLS,
};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::concentration::ConcentrationError;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum BanditError {
    #[error("policy already decided; no further arms can be selected")]
    Terminal,
    #[error("observed arm {got} but arm {expected} was selected")]
    ArmMismatch { expected: usize, got: usize },
    #[error("observe called without a pending selection")]
    NoPendingSelection,
    #[error("invalid policy configuration: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Concentration(#[from] ConcentrationError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArmState {
    pub pulls: u64,
    pub sum: f64,
    /// Running mean, updated as `m ← m + (x − m)/n`. Zero before the first pull.
    pub mean: f64,
    pub active: bool,
}

impl ArmState {
    pub fn new() -> Self {
        ArmState { pulls: 0, sum: 0.0, mean: 0.0, active: true }
    }

    pub fn push(&mut self, reward: f64) {
        self.pulls += 1;
        self.sum += reward;
        self.mean += (reward - self.mean) / self.pulls as f64;
    }

    /// Empirical mean, undefined before the first pull.
    pub fn empirical_mean(&self) -> Option<f64> {
        (self.pulls > 0).then_some(self.mean)
    }
}

impl Default for ArmState {
    fn default() -> Self {
        Self::new()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Decision {
    pub chosen_arm: usize,
    pub decision_step: u64,
    pub pulls_per_arm: Vec<u64>,
}

/// One line of a trajectory dump, written after the reward is observed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    pub step: u64,
    pub arm: usize,
    pub reward: f64,
    pub pulls: Vec<u64>,
    pub means: Vec<Option<f64>>,
    pub radii: Vec<Option<f64>>,
}

/// Result of driving a policy until it decides or hits the step cap.
#[derive(Debug, Clone, PartialEq)]
pub struct RunResult {
    pub decision: Option<Decision>,
    pub steps: u64,
    pub pulls_per_arm: Vec<u64>,
    pub reward_sum: f64,
}

/// Runs `policy` against `source` for at most `max_steps` pulls.
///
/// When `trace` is given every step is appended to it.
pub fn run_policy<S: RewardSource + ?Sized>(
    policy: &mut IidPolicy,
    source: &mut S,
    max_steps: u64,
    mut trace: Option<&mut Vec<StepRecord>>,
) -> Result<RunResult, BanditError> {
    let mut reward_sum = 0.0;
    let mut decision = policy.check_decision();
    while decision.is_none() && policy.steps() < max_steps {
        let arm = policy.select_arm()?;
        let reward = source.reward(arm);
        reward_sum += reward;
        policy.observe(arm, reward)?;
        if let Some(trace) = trace.as_deref_mut() {
            trace.push(policy.record(arm, reward));
        }
        decision = policy.check_decision();
    }
    Ok(RunResult {
        decision,
        steps: policy.steps(),
        pulls_per_arm: policy.arms().iter().map(|a| a.pulls).collect(),
        reward_sum,
    })
}

/// Δ-weighted count of pulls of suboptimal arms.
pub fn pseudo_regret(means: &[f64], pulls: &[u64]) -> f64 {
    let best = means.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    means.iter().zip(pulls).map(|(m, &n)| (best - m) * n as f64).sum()
}

/// Writes records as newline-delimited JSON.
pub fn write_ndjson<W: std::io::Write, T: Serialize>(
    mut out: W,
    records: &[T],
) -> std::io::Result<()> {
    for record in records {
        serde_json::to_writer(&mut out, record)?;
        out.write_all(b"\n")?;
    }
    Ok(())
}
