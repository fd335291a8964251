use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::seed::{derive_seed, StreamKind};
use super::SimError;
use crate::concentration::{delta_tilde, MmLogScale, RadiusFamily, RadiusSpec, Variance};

/// A coverage experiment for one radius family.
///
/// Iid families draw one arm of mean 0 for `horizon` pulls. Unit families
/// add one unit per step until `units` are present and keep sampling all of
/// them until step `horizon`; the latent unit means are centred at 0.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoverageConfig {
    pub family: RadiusFamily,
    pub variance: Variance,
    pub delta: f64,
    pub horizon: u64,
    pub replications: u64,
    pub seed: u64,
    /// Multiplies the radius; 1 checks the radius itself.
    pub radius_scale: f64,
    pub units: usize,
    /// Log factor of the iid radii. 1 gives `√(2σ²/n·log(log²n/δ))`.
    pub log_factor: f64,
    pub mm_scale: MmLogScale,
}

impl CoverageConfig {
    pub fn iid(sigma_sq: f64, delta: f64, horizon: u64, replications: u64) -> Self {
        CoverageConfig {
            family: RadiusFamily::UcbIid,
            variance: Variance::Iid { sigma_sq },
            delta,
            horizon,
            replications,
            seed: 0,
            radius_scale: 1.0,
            units: 0,
            log_factor: 1.0,
            mm_scale: MmLogScale::default(),
        }
    }

    pub fn mean_of_means(
        sigma_r_sq: f64,
        sigma_eps_sq: f64,
        delta: f64,
        units: usize,
        horizon: u64,
        replications: u64,
    ) -> Self {
        CoverageConfig {
            family: RadiusFamily::MeanOfMeans,
            variance: Variance::Unit { sigma_r_sq, sigma_eps_sq },
            units,
            ..Self::iid(0.0, delta, horizon, replications)
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoverageReport {
    pub family: RadiusFamily,
    pub delta: f64,
    pub delta_tilde: f64,
    pub radius_scale: f64,
    pub replications: u64,
    pub violations: u64,
    pub violation_rate: f64,
    /// `√(δ̃(1−δ̃)/replications)`.
    pub monte_carlo_se: f64,
    /// Whether `violation_rate ≤ δ̃ + 3·monte_carlo_se`.
    pub within_tolerance: bool,
}

/// Fraction of replications in which the estimate drops below
/// `μ − scale·ε` at some step up to the horizon.
pub fn verify_concentration(config: &CoverageConfig) -> Result<CoverageReport, SimError> {
    if config.horizon < 100 {
        return Err(SimError::Config(format!("horizon must be at least 100, got {}", config.horizon)));
    }
    if config.replications == 0 {
        return Err(SimError::Config("replications must be at least 1".into()));
    }
    if !(config.radius_scale >= 0.0 && config.radius_scale.is_finite()) {
        return Err(SimError::Config(format!("radius scale {}", config.radius_scale)));
    }
    let spec = RadiusSpec::new(config.family, config.variance, config.delta, 2)?
        .with_log_factor(config.log_factor)?
        .with_mm_scale(config.mm_scale);
    let unit = config.family.is_unit();
    if unit && config.units == 0 {
        return Err(SimError::Config("unit coverage needs at least one unit".into()));
    }
    if config.family.needs_time() {
        return Err(SimError::Config(format!("{:?} is not an anytime radius", config.family)));
    }
    // Radii for every count that can occur, computed once.
    let max_n = if unit { config.units as u64 } else { config.horizon };
    let radii: Vec<f64> = (1..=max_n)
        .map(|n| spec.radius(n, None).map(|r| r * config.radius_scale))
        .collect::<Result<_, _>>()?;

    let violated: Vec<bool> = (0..config.replications)
        .into_par_iter()
        .map(|rep| {
            let seed = derive_seed(config.seed, &[StreamKind::Coverage as u64, rep]);
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            if unit {
                unit_violation(config, &radii, &mut rng)
            } else {
                iid_violation(config, &radii, &mut rng)
            }
        })
        .collect();
    let violations = violated.iter().filter(|v| **v).count() as u64;
    let dt = delta_tilde(config.delta)?.value();
    let rate = violations as f64 / config.replications as f64;
    let se = (dt * (1.0 - dt) / config.replications as f64).sqrt();
    Ok(CoverageReport {
        family: config.family,
        delta: config.delta,
        delta_tilde: dt,
        radius_scale: config.radius_scale,
        replications: config.replications,
        violations,
        violation_rate: rate,
        monte_carlo_se: se,
        within_tolerance: rate <= dt + 3.0 * se,
    })
}

fn iid_violation(config: &CoverageConfig, radii: &[f64], rng: &mut ChaCha8Rng) -> bool {
    let sd = config.variance.total().sqrt();
    let mut sum = 0.0;
    for (i, r) in radii.iter().enumerate() {
        let z: f64 = StandardNormal.sample(rng);
        sum += sd * z;
        if sum / ((i + 1) as f64) < -r {
            return true;
        }
    }
    false
}

fn unit_violation(config: &CoverageConfig, radii: &[f64], rng: &mut ChaCha8Rng) -> bool {
    let (sr, se) = config.variance.unit_pair();
    let (sr, se) = (sr.sqrt(), se.sqrt());
    let mut latent = Vec::with_capacity(config.units);
    // Per unit: running sample mean and count.
    let mut means: Vec<f64> = Vec::with_capacity(config.units);
    let mut counts: Vec<f64> = Vec::with_capacity(config.units);
    let mut sum_of_means = 0.0;
    for _ in 0..config.horizon {
        for u in 0..means.len() {
            let z: f64 = StandardNormal.sample(rng);
            let x = latent[u] + se * z;
            counts[u] += 1.0;
            let step = (x - means[u]) / counts[u];
            means[u] += step;
            sum_of_means += step;
        }
        if means.len() < config.units {
            let zr: f64 = StandardNormal.sample(rng);
            let ze: f64 = StandardNormal.sample(rng);
            let r = sr * zr;
            latent.push(r);
            means.push(r + se * ze);
            counts.push(1.0);
            sum_of_means += r + se * ze;
        }
        let n = means.len();
        if sum_of_means / (n as f64) < -radii[n - 1] {
            return true;
        }
    }
    false
}
