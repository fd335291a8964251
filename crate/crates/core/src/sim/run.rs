use serde::{Deserialize, Serialize};

use super::seed::{derive_seed, policy_tag, StreamKind};
use super::{ExperimentConfig, PolicySpec, Setting, SimError, TieBreakMode};
use crate::bandit::{pseudo_regret, GaussianArms, IidPolicy, PolicyConfig, RewardSource, TieBreak};
use crate::concentration::{Alpha, RadiusFamily, RadiusSpec};
use crate::unit::{
    static_anytime_test, static_fixed_horizon_test, GaussianUnits, StaticWorld, UnitWorld,
    UnitWorldConfig,
};

/// One replication of one policy at one δ.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentOutcome {
    /// Decision time: pulls (iid), allocated units (unit) or steps (static).
    /// `None` when the step cap was hit first.
    pub decision_step: Option<u64>,
    pub chosen_arm: Option<usize>,
    /// Chosen arm has the largest true mean; always true when all means tie,
    /// always false without a decision.
    pub correct: bool,
    pub pseudo_regret: f64,
    pub realized_regret: f64,
    /// No estimate left its stopping radius around the truth at any check.
    pub concentration_held: bool,
    /// Steps taken, decided or not.
    pub steps: u64,
}

fn best_arms(means: &[f64]) -> impl Fn(usize) -> bool + '_ {
    let best = means.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    move |i| means[i] == best
}

/// Seed of a shared stream: the policy is part of the key only without CRN.
fn stream_seed(
    config: &ExperimentConfig,
    policy: &PolicySpec,
    kind: StreamKind,
    delta_index: usize,
    replication: u64,
    slot: usize,
) -> u64 {
    let tag = if config.crn { 0 } else { policy_tag(policy) };
    derive_seed(config.seed, &[kind as u64, tag, delta_index as u64, replication, slot as u64])
}

fn private_seed(
    config: &ExperimentConfig,
    policy: &PolicySpec,
    kind: StreamKind,
    delta_index: usize,
    replication: u64,
) -> u64 {
    derive_seed(config.seed, &[kind as u64, policy_tag(policy), delta_index as u64, replication])
}

/// Runs replication `replication` of `policy` at the `delta_index`-th grid point.
///
/// Deterministic in `(seed, policy, delta_index, replication)`. With CRN on,
/// all policies at the same `(delta_index, replication)` read the same
/// reward streams.
pub fn run_one(
    config: &ExperimentConfig,
    policy: &PolicySpec,
    delta_index: usize,
    replication: u64,
) -> Result<ExperimentOutcome, SimError> {
    if !policy.allowed_in(config.setting) {
        return Err(SimError::Config(format!(
            "policy `{policy}` is not available in the {} setting",
            config.setting
        )));
    }
    let log_inv = *config.log_inv_delta.get(delta_index).ok_or_else(|| {
        SimError::Config(format!("delta index {delta_index} is outside the grid"))
    })?;
    let delta = (-log_inv).exp();
    match config.setting {
        Setting::Iid => run_iid(config, policy, delta, delta_index, replication),
        Setting::Unit => run_unit(config, policy, delta, delta_index, replication),
        Setting::Static => run_static(config, policy, delta, delta_index, replication),
    }
}

fn run_iid(
    config: &ExperimentConfig,
    policy: &PolicySpec,
    delta: f64,
    delta_index: usize,
    replication: u64,
) -> Result<ExperimentOutcome, SimError> {
    let k = config.means.len();
    let sigma_sq = config.sigma_sq;
    let mut pc = match policy {
        PolicySpec::Etc => PolicyConfig::etc(sigma_sq, delta),
        PolicySpec::Ucb(a) => PolicyConfig::ucb(*a, sigma_sq, delta),
        PolicySpec::EtcPrime => PolicyConfig::etc_prime(sigma_sq, delta),
        other => return Err(SimError::Config(format!("`{other}` is not an iid policy"))),
    }
    .with_arms(k);
    pc.init_pulls = config.init_pulls;
    pc.ucb_log_factor = config.ucb_log_factor;
    if config.tie_break == TieBreakMode::Random {
        let seed = private_seed(config, policy, StreamKind::TieBreak, delta_index, replication);
        pc.tie_break = TieBreak::Random { seed };
    }
    if config.etc_random_first {
        pc.random_first =
            Some(private_seed(config, policy, StreamKind::FirstArm, delta_index, replication));
    }
    let mut pol = IidPolicy::new(pc)?;
    let seeds: Vec<u64> = (0..k)
        .map(|arm| stream_seed(config, policy, StreamKind::Reward, delta_index, replication, arm))
        .collect();
    let mut arms = GaussianArms::new(&config.means, &vec![sigma_sq; k], &seeds);
    let is_etc = *policy == PolicySpec::Etc;

    let mut held = true;
    let mut reward_sum = 0.0;
    let mut decision = None;
    while pol.steps() < config.max_steps {
        let arm = pol.select_arm()?;
        let reward = arms.reward(arm);
        reward_sum += reward;
        pol.observe(arm, reward)?;
        if held {
            held = if is_etc {
                etc_gap_held(&pol, &config.means)
            } else {
                let state = &pol.arms()[arm];
                (state.mean - config.means[arm]).abs() <= pol.radius_at(state.pulls)
            };
        }
        if let Some(d) = pol.check_decision() {
            decision = Some(d);
            break;
        }
    }
    let pulls: Vec<u64> = pol.arms().iter().map(|a| a.pulls).collect();
    let best = config.means.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let is_best = best_arms(&config.means);
    let chosen = decision.as_ref().map(|d| d.chosen_arm);
    Ok(ExperimentOutcome {
        decision_step: decision.as_ref().map(|d| d.decision_step),
        chosen_arm: chosen,
        correct: chosen.is_some_and(&is_best),
        pseudo_regret: pseudo_regret(&config.means, &pulls),
        realized_regret: best * pol.steps() as f64 - reward_sum,
        concentration_held: held,
        steps: pol.steps(),
    })
}

/// ETC's event: at equal pull counts every estimated gap to the first active
/// arm is within the threshold of the true gap.
fn etc_gap_held(pol: &IidPolicy, means: &[f64]) -> bool {
    let active: Vec<usize> = (0..means.len()).filter(|&i| pol.arms()[i].active).collect();
    let n = pol.arms()[active[0]].pulls;
    if active.iter().any(|&i| pol.arms()[i].pulls != n) {
        return true;
    }
    let threshold = pol.radius_at(n);
    let r = active[0];
    let mr = pol.arms()[r].mean;
    active.iter().all(|&i| {
        ((pol.arms()[i].mean - mr) - (means[i] - means[r])).abs() <= threshold
    })
}

fn unit_sources(
    config: &ExperimentConfig,
    policy: &PolicySpec,
    delta_index: usize,
    replication: u64,
) -> GaussianUnits {
    let seeds: Vec<(u64, u64)> = (0..2)
        .map(|p| {
            (
                stream_seed(config, policy, StreamKind::UnitMean, delta_index, replication, p),
                stream_seed(config, policy, StreamKind::UnitNoise, delta_index, replication, p),
            )
        })
        .collect();
    GaussianUnits::new(&config.means, config.sigma_r_sq, config.sigma_eps_sq, &seeds)
}

/// `Σ_u (max_i r^i − r_u)` over every allocated unit.
fn latent_regret(means: &[f64], latent: [&[f64]; 2], weight: f64) -> f64 {
    let best = means.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    latent.iter().flat_map(|l| l.iter()).map(|r| (best - r) * weight).sum()
}

fn run_unit(
    config: &ExperimentConfig,
    policy: &PolicySpec,
    delta: f64,
    delta_index: usize,
    replication: u64,
) -> Result<ExperimentOutcome, SimError> {
    let r_means = [config.means[0], config.means[1]];
    let (sr, se) = (config.sigma_r_sq, config.sigma_eps_sq);
    let mut wc = match policy {
        PolicySpec::EtcMm => UnitWorldConfig::etc_mm(r_means, sr, se, delta),
        PolicySpec::UcbMm(a) => UnitWorldConfig::ucb_mm(*a, r_means, sr, se, delta),
        PolicySpec::EtcPrime => UnitWorldConfig::ucb_mm(Alpha::INFINITY, r_means, sr, se, delta),
        other => return Err(SimError::Config(format!("`{other}` is not a unit policy"))),
    };
    if *policy != PolicySpec::EtcMm {
        wc.arrivals_per_step = config.arrivals_per_step;
        wc.alt_radius = config.mm_alt_radius;
    }
    wc.max_steps = config.max_steps;
    wc.mm_scale = config.mm_scale;
    let source = unit_sources(config, policy, delta_index, replication);
    let mut world = UnitWorld::new(wc, source)?;
    let decision = world.run(None)?;

    let pops = world.populations();
    let units = [pops[0].num_units() as u64, pops[1].num_units() as u64];
    let is_best = best_arms(&config.means);
    let gaps: Vec<f64> = {
        let best = r_means[0].max(r_means[1]);
        r_means.iter().map(|m| best - m).collect()
    };
    let chosen = decision.as_ref().map(|d| d.chosen_population);
    Ok(ExperimentOutcome {
        decision_step: decision.as_ref().map(|d| d.total_units()),
        chosen_arm: chosen,
        correct: chosen.is_some_and(&is_best),
        pseudo_regret: gaps[0] * units[0] as f64 + gaps[1] * units[1] as f64,
        realized_regret: latent_regret(
            &config.means,
            [world.latent_means(0), world.latent_means(1)],
            1.0,
        ),
        concentration_held: world.concentration_held(),
        steps: world.step_count(),
    })
}

/// Static populations: `n` units each, present from the first step.
///
/// Regret counts every sample served by the worse population, `Δ·n·t`.
fn run_static(
    config: &ExperimentConfig,
    policy: &PolicySpec,
    delta: f64,
    delta_index: usize,
    replication: u64,
) -> Result<ExperimentOutcome, SimError> {
    let family = match policy {
        PolicySpec::StaticAnytime => RadiusFamily::StaticAnytime,
        PolicySpec::StaticFixed => RadiusFamily::StaticFixedHorizon,
        other => return Err(SimError::Config(format!("`{other}` is not a static policy"))),
    };
    let spec = RadiusSpec::unit(family, config.sigma_r_sq, config.sigma_eps_sq, delta)?;
    let source = unit_sources(config, policy, delta_index, replication);
    let n = config.static_units as usize;
    let mut world = StaticWorld::new(n, spec, source)?;
    let true_gap = config.means[0] - config.means[1];

    let mut held = true;
    let mut chosen = None;
    let mut check = |world: &StaticWorld<GaussianUnits>, t: u64| -> Result<(), SimError> {
        let pops = world.populations();
        let threshold = world.spec().radius(n as u64, Some(t))?;
        let est = pops[0].mean_of_means().expect("n ≥ 1") - pops[1].mean_of_means().expect("n ≥ 1");
        if (est - true_gap).abs() > threshold {
            held = false;
        }
        Ok(())
    };
    match policy {
        PolicySpec::StaticFixed => {
            let horizon = config.static_horizon.min(config.max_steps);
            while world.step_count() < horizon {
                world.step();
            }
            check(&world, horizon)?;
            if horizon == config.static_horizon {
                let pops = world.populations();
                chosen = static_fixed_horizon_test(&pops[0], &pops[1], horizon, world.spec())?;
            }
        }
        _ => {
            while world.step_count() < config.max_steps {
                world.step();
                let t = world.step_count();
                check(&world, t)?;
                let pops = world.populations();
                chosen = static_anytime_test(&pops[0], &pops[1], t, world.spec())?;
                if chosen.is_some() {
                    break;
                }
            }
        }
    }
    let t = world.step_count();
    let is_best = best_arms(&config.means);
    let gap = true_gap.abs();
    let worse = if config.means[0] >= config.means[1] { 1 } else { 0 };
    let best = config.means[0].max(config.means[1]);
    let realized: f64 =
        world.latent_means(worse).iter().map(|r| (best - r) * t as f64).sum();
    Ok(ExperimentOutcome {
        decision_step: chosen.map(|_| t),
        chosen_arm: chosen,
        correct: chosen.is_some_and(&is_best),
        pseudo_regret: gap * n as f64 * t as f64,
        realized_regret: realized,
        concentration_held: held,
        steps: t,
    })
}
