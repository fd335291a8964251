use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{ArmState, BanditError, Decision, StepRecord};
use crate::concentration::{Alpha, RadiusFamily, RadiusSpec, Variance, DEFAULT_UCB_LOG_FACTOR};

/// Pulls forced on every arm before indexes are compared.
pub const DEFAULT_INIT_PULLS: u64 = 2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PolicyKind {
    Etc,
    UcbAlpha,
    EtcPrime,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TieBreak {
    #[default]
    LowestIndex,
    Random { seed: u64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolicyConfig {
    pub kind: PolicyKind,
    /// Only read by `UcbAlpha`.
    pub alpha: Alpha,
    pub sigma_sq: f64,
    pub delta: f64,
    pub num_arms: usize,
    pub init_pulls: u64,
    pub tie_break: TieBreak,
    /// ETC only: seed used to draw the arm that starts the round-robin.
    pub random_first: Option<u64>,
    pub ucb_log_factor: f64,
}

impl PolicyConfig {
    fn base(kind: PolicyKind, alpha: Alpha, sigma_sq: f64, delta: f64) -> Self {
        PolicyConfig {
            kind,
            alpha,
            sigma_sq,
            delta,
            num_arms: 2,
            init_pulls: DEFAULT_INIT_PULLS,
            tie_break: TieBreak::LowestIndex,
            random_first: None,
            ucb_log_factor: DEFAULT_UCB_LOG_FACTOR,
        }
    }

    pub fn etc(sigma_sq: f64, delta: f64) -> Self {
        Self::base(PolicyKind::Etc, Alpha::INFINITY, sigma_sq, delta)
    }

    pub fn ucb(alpha: Alpha, sigma_sq: f64, delta: f64) -> Self {
        Self::base(PolicyKind::UcbAlpha, alpha, sigma_sq, delta)
    }

    pub fn etc_prime(sigma_sq: f64, delta: f64) -> Self {
        Self::base(PolicyKind::EtcPrime, Alpha::INFINITY, sigma_sq, delta)
    }

    pub fn with_arms(mut self, num_arms: usize) -> Self {
        self.num_arms = num_arms;
        self
    }

    pub fn with_tie_break(mut self, tie_break: TieBreak) -> Self {
        self.tie_break = tie_break;
        self
    }

    /// Whether the configuration carries a finite decision-time guarantee.
    pub fn guarantees_decision(&self) -> bool {
        self.kind != PolicyKind::UcbAlpha || self.alpha.guarantees_decision()
    }

    fn explores_uniformly(&self) -> bool {
        self.kind == PolicyKind::EtcPrime
            || (self.kind == PolicyKind::UcbAlpha && self.alpha.is_infinite())
    }
}

/// ETC, UCB_α or ETC' on `K` arms.
///
/// UCB_α samples by `r̂ + α·ε` but stops with the plain `ε`: an arm is
/// dropped once another arm's lower bound clears its upper bound, and the
/// policy decides when a single arm is left. ETC pulls active arms in
/// round-robin order and compares empirical means only at equal pull counts.
#[derive(Debug, Clone)]
pub struct IidPolicy {
    config: PolicyConfig,
    spec: RadiusSpec,
    arms: Vec<ArmState>,
    /// Stopping radius per arm at its current pull count.
    eps: Vec<f64>,
    pending: Option<usize>,
    decision: Option<Decision>,
    cursor: usize,
    tie_rng: Option<ChaCha8Rng>,
    steps: u64,
}

impl IidPolicy {
    pub fn new(config: PolicyConfig) -> Result<Self, BanditError> {
        let family = match config.kind {
            PolicyKind::Etc => RadiusFamily::EtcIid,
            PolicyKind::UcbAlpha | PolicyKind::EtcPrime => RadiusFamily::UcbIid,
        };
        let spec = RadiusSpec::new(
            family,
            Variance::Iid { sigma_sq: config.sigma_sq },
            config.delta,
            config.num_arms,
        )?
        .with_log_factor(config.ucb_log_factor)?;
        if config.kind == PolicyKind::UcbAlpha && config.init_pulls == 0 {
            return Err(BanditError::InvalidConfig("init_pulls must be at least 1".into()));
        }
        let k = config.num_arms;
        let cursor = match config.random_first {
            Some(seed) if config.kind == PolicyKind::Etc => {
                ChaCha8Rng::seed_from_u64(seed).random_range(0..k)
            }
            _ => 0,
        };
        let tie_rng = match config.tie_break {
            TieBreak::LowestIndex => None,
            TieBreak::Random { seed } => Some(ChaCha8Rng::seed_from_u64(seed)),
        };
        Ok(IidPolicy {
            config,
            spec,
            arms: vec![ArmState::new(); k],
            eps: vec![f64::INFINITY; k],
            pending: None,
            decision: None,
            cursor,
            tie_rng,
            steps: 0,
        })
    }

    pub fn config(&self) -> &PolicyConfig {
        &self.config
    }

    pub fn arms(&self) -> &[ArmState] {
        &self.arms
    }

    pub fn steps(&self) -> u64 {
        self.steps
    }

    pub fn decision(&self) -> Option<&Decision> {
        self.decision.as_ref()
    }

    pub fn is_terminal(&self) -> bool {
        self.decision.is_some()
    }

    /// Stopping radius at pull count `n`: the per-arm `ε_n`, or for ETC the
    /// threshold on the gap between two arms pulled `n` times each.
    pub fn radius_at(&self, n: u64) -> f64 {
        if n == 0 {
            return f64::INFINITY;
        }
        self.spec.radius(n, None).expect("spec validated at construction")
    }

    pub fn arm_radius(&self, arm: usize) -> Option<f64> {
        (self.arms[arm].pulls > 0).then(|| self.eps[arm])
    }

    /// Sampling index `r̂ + α·ε`; `None` before the first pull or for α = ∞.
    pub fn index(&self, arm: usize) -> Option<f64> {
        let a = self.config.alpha.finite()?;
        let mean = self.arms[arm].empirical_mean()?;
        Some(mean + a * self.eps[arm])
    }

    pub fn select_arm(&mut self) -> Result<usize, BanditError> {
        if self.decision.is_some() {
            return Err(BanditError::Terminal);
        }
        if let Some(arm) = self.pending {
            return Ok(arm);
        }
        let arm = match self.config.kind {
            PolicyKind::Etc => self.next_round_robin(),
            _ if self.config.explores_uniformly() => self.least_pulled(|_| true),
            _ => {
                let n0 = self.config.init_pulls;
                if self.active().any(|i| self.arms[i].pulls < n0) {
                    self.least_pulled(|arm| arm.pulls < n0)
                } else {
                    self.best_index()
                }
            }
        };
        self.pending = Some(arm);
        Ok(arm)
    }

    pub fn observe(&mut self, arm: usize, reward: f64) -> Result<(), BanditError> {
        let expected = self.pending.ok_or(BanditError::NoPendingSelection)?;
        if arm != expected {
            return Err(BanditError::ArmMismatch { expected, got: arm });
        }
        self.pending = None;
        self.steps += 1;
        let state = &mut self.arms[arm];
        state.push(reward);
        let n = state.pulls;
        self.eps[arm] = self.radius_at(n);
        if self.config.kind == PolicyKind::Etc {
            self.cursor = (arm + 1) % self.arms.len();
        }
        Ok(())
    }

    /// Applies the stopping rule; returns the decision once one is reached.
    pub fn check_decision(&mut self) -> Option<Decision> {
        if let Some(d) = &self.decision {
            return Some(d.clone());
        }
        if self.pending.is_some() {
            return None;
        }
        let active: Vec<usize> = self.active().collect();
        if active.iter().any(|&i| self.arms[i].pulls == 0) {
            return None;
        }
        let dropped = match self.config.kind {
            PolicyKind::Etc => {
                let n = self.arms[active[0]].pulls;
                if active.iter().any(|&i| self.arms[i].pulls != n) {
                    return None;
                }
                let threshold = self.eps[active[0]];
                let means: Vec<f64> = active.iter().map(|&i| self.arms[i].mean).collect();
                let best = means.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                active
                    .iter()
                    .zip(&means)
                    .filter(|(_, &m)| best - m > threshold)
                    .map(|(&i, _)| i)
                    .collect::<Vec<_>>()
            }
            _ => {
                let means: Vec<f64> = active.iter().map(|&i| self.arms[i].mean).collect();
                let radii: Vec<f64> = active.iter().map(|&i| self.eps[i]).collect();
                dominated_arms(&means, &radii).into_iter().map(|j| active[j]).collect()
            }
        };
        for i in dropped {
            self.arms[i].active = false;
        }
        let remaining: Vec<usize> = self.active().collect();
        let [winner] = remaining[..] else { return None };
        let decision = Decision {
            chosen_arm: winner,
            decision_step: self.steps,
            pulls_per_arm: self.arms.iter().map(|a| a.pulls).collect(),
        };
        self.decision = Some(decision.clone());
        Some(decision)
    }

    pub fn record(&self, arm: usize, reward: f64) -> StepRecord {
        StepRecord {
            step: self.steps,
            arm,
            reward,
            pulls: self.arms.iter().map(|a| a.pulls).collect(),
            means: self.arms.iter().map(|a| a.empirical_mean()).collect(),
            radii: (0..self.arms.len()).map(|i| self.arm_radius(i)).collect(),
        }
    }

    fn active(&self) -> impl Iterator<Item = usize> + '_ {
        self.arms.iter().enumerate().filter(|(_, a)| a.active).map(|(i, _)| i)
    }

    fn next_round_robin(&self) -> usize {
        let k = self.arms.len();
        (0..k)
            .map(|off| (self.cursor + off) % k)
            .find(|&i| self.arms[i].active)
            .expect("at least one active arm before a decision")
    }

    fn least_pulled(&mut self, eligible: impl Fn(&ArmState) -> bool) -> usize {
        let candidates: Vec<usize> = self.active().filter(|&i| eligible(&self.arms[i])).collect();
        let fewest = candidates.iter().map(|&i| self.arms[i].pulls).min().expect("candidates");
        let tied: Vec<usize> =
            candidates.into_iter().filter(|&i| self.arms[i].pulls == fewest).collect();
        self.break_tie(&tied)
    }

    fn best_index(&mut self) -> usize {
        let a = self.config.alpha.value();
        let scores: Vec<(usize, f64)> =
            self.active().map(|i| (i, self.arms[i].mean + a * self.eps[i])).collect();
        let best = scores.iter().map(|s| s.1).fold(f64::NEG_INFINITY, f64::max);
        let tied: Vec<usize> = scores.into_iter().filter(|s| s.1 == best).map(|s| s.0).collect();
        self.break_tie(&tied)
    }

    fn break_tie(&mut self, tied: &[usize]) -> usize {
        match (&mut self.tie_rng, tied.len()) {
            (Some(rng), n) if n > 1 => tied[rng.random_range(0..n)],
            _ => tied[0],
        }
    }
}

/// Index of the arm whose lower bound clears every other arm's upper bound,
/// `r̂_i − ε_i > r̂_j + ε_j` for all `j ≠ i`.
pub fn separated_winner(means: &[f64], radii: &[f64]) -> Option<usize> {
    let (best, _) = means
        .iter()
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |acc, (i, &m)| if m > acc.1 { (i, m) } else { acc });
    let lower = means[best] - radii[best];
    means
        .iter()
        .zip(radii)
        .enumerate()
        .all(|(j, (m, r))| j == best || lower > m + r)
        .then_some(best)
}

/// Arms `k` for which some other arm `i` has `r̂_i − ε_i > r̂_k + ε_k`.
pub fn dominated_arms(means: &[f64], radii: &[f64]) -> Vec<usize> {
    let top_lower = means
        .iter()
        .zip(radii)
        .map(|(m, r)| m - r)
        .fold(f64::NEG_INFINITY, f64::max);
    (0..means.len()).filter(|&k| top_lower > means[k] + radii[k]).collect()
}
