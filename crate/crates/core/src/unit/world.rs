use serde::{Deserialize, Serialize};

use super::{UnitError, UnitPopulation, UnitSource};
use crate::bandit::separated_winner;
use crate::concentration::{Alpha, MmLogScale, RadiusFamily, RadiusSpec, Variance};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum UnitPolicyKind {
    UcbMm,
    EtcMm,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UnitWorldConfig {
    pub policy: UnitPolicyKind,
    pub r_means: [f64; 2],
    pub sigma_r_sq: f64,
    pub sigma_eps_sq: f64,
    pub arrivals_per_step: u32,
    pub delta: f64,
    /// Only read by UCB-MM.
    pub alpha: Alpha,
    pub max_steps: u64,
    pub mm_scale: MmLogScale,
    /// UCB-MM only: use the two-term radius that tolerates `σ_ε² = 0`.
    pub alt_radius: bool,
}

impl UnitWorldConfig {
    pub fn ucb_mm(alpha: Alpha, r_means: [f64; 2], sigma_r_sq: f64, sigma_eps_sq: f64, delta: f64) -> Self {
        UnitWorldConfig {
            policy: UnitPolicyKind::UcbMm,
            r_means,
            sigma_r_sq,
            sigma_eps_sq,
            arrivals_per_step: 1,
            delta,
            alpha,
            max_steps: 10_000_000,
            mm_scale: MmLogScale::default(),
            alt_radius: false,
        }
    }

    pub fn etc_mm(r_means: [f64; 2], sigma_r_sq: f64, sigma_eps_sq: f64, delta: f64) -> Self {
        UnitWorldConfig {
            policy: UnitPolicyKind::EtcMm,
            arrivals_per_step: 2,
            ..Self::ucb_mm(Alpha::INFINITY, r_means, sigma_r_sq, sigma_eps_sq, delta)
        }
    }

    pub fn radius_spec(&self) -> Result<RadiusSpec, UnitError> {
        let family = match (self.policy, self.alt_radius) {
            (UnitPolicyKind::EtcMm, _) => RadiusFamily::EtcMm,
            (UnitPolicyKind::UcbMm, false) => RadiusFamily::MeanOfMeans,
            (UnitPolicyKind::UcbMm, true) => RadiusFamily::MeanOfMeansAlt,
        };
        let variance =
            Variance::Unit { sigma_r_sq: self.sigma_r_sq, sigma_eps_sq: self.sigma_eps_sq };
        Ok(RadiusSpec::new(family, variance, self.delta, 2)?.with_mm_scale(self.mm_scale))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct UnitDecision {
    pub chosen_population: usize,
    pub decision_step: u64,
    pub units: [usize; 2],
}

impl UnitDecision {
    /// Units allocated over both populations.
    pub fn total_units(&self) -> u64 {
        (self.units[0] + self.units[1]) as u64
    }
}

/// One line of a unit-trajectory dump, written at the end of the step.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UnitStepRecord {
    pub step: u64,
    pub allocated: Vec<usize>,
    pub units: [usize; 2],
    pub mean_of_means: [Option<f64>; 2],
    pub total_mean: [Option<f64>; 2],
    pub radii: [Option<f64>; 2],
}

/// `r̂ + α·ε` of a population with the mean-of-means radius at its unit count.
pub fn mm_index(pop: &UnitPopulation, spec: &RadiusSpec, alpha: Alpha) -> Result<f64, UnitError> {
    let mean = pop.mean_of_means().ok_or(UnitError::EmptyPopulation)?;
    match alpha.finite() {
        Some(a) if a == 0.0 => Ok(mean),
        Some(a) => Ok(mean + a * spec.radius(pop.num_units() as u64, None)?),
        None => Ok(f64::INFINITY),
    }
}

/// Two populations evolving under UCB-MM_α or ETC-MM.
///
/// Each step allocates the arriving units, then every unit (new ones
/// included) emits one sample, then the stopping rule is checked with the
/// plain radii.
#[derive(Debug, Clone)]
pub struct UnitWorld<S> {
    config: UnitWorldConfig,
    spec: RadiusSpec,
    pops: [UnitPopulation; 2],
    latent: [Vec<f64>; 2],
    source: S,
    step: u64,
    eps: [f64; 2],
    decision: Option<UnitDecision>,
    allocated: Vec<usize>,
    cursor: usize,
    buf: Vec<f64>,
    concentration_held: bool,
}

impl<S: UnitSource> UnitWorld<S> {
    pub fn new(config: UnitWorldConfig, source: S) -> Result<Self, UnitError> {
        if !(1..=2).contains(&config.arrivals_per_step) {
            return Err(UnitError::InvalidConfig(format!(
                "arrivals_per_step must be 1 or 2, got {}",
                config.arrivals_per_step
            )));
        }
        let spec = config.radius_spec()?;
        Ok(UnitWorld {
            config,
            spec,
            pops: [UnitPopulation::new(), UnitPopulation::new()],
            latent: [Vec::new(), Vec::new()],
            source,
            step: 0,
            eps: [f64::INFINITY; 2],
            decision: None,
            allocated: Vec::with_capacity(2),
            cursor: 0,
            buf: Vec::new(),
            concentration_held: true,
        })
    }

    pub fn config(&self) -> &UnitWorldConfig {
        &self.config
    }

    pub fn spec(&self) -> &RadiusSpec {
        &self.spec
    }

    pub fn populations(&self) -> &[UnitPopulation; 2] {
        &self.pops
    }

    /// Latent unit means `r_u` of a population, in arrival order.
    pub fn latent_means(&self, population: usize) -> &[f64] {
        &self.latent[population]
    }

    pub fn step_count(&self) -> u64 {
        self.step
    }

    pub fn decision(&self) -> Option<&UnitDecision> {
        self.decision.as_ref()
    }

    /// Populations that received a unit during the last step.
    pub fn last_allocation(&self) -> &[usize] {
        &self.allocated
    }

    /// Stopping radius of a population at its current unit count.
    pub fn radius(&self, population: usize) -> Option<f64> {
        (!self.pops[population].is_empty()).then(|| self.eps[population])
    }

    /// Whether every population estimate stayed within its radius of the
    /// true mean at every step so far (for ETC-MM: the estimated gap, at
    /// equal unit counts).
    pub fn concentration_held(&self) -> bool {
        self.concentration_held
    }

    /// Runs one step; returns the decision if the stopping rule fires.
    pub fn step(&mut self) -> Result<Option<UnitDecision>, UnitError> {
        if self.decision.is_some() {
            return Err(UnitError::Terminal);
        }
        self.step += 1;
        self.allocate();
        self.sample();
        for i in 0..2 {
            let n = self.pops[i].num_units() as u64;
            if n > 0 {
                self.eps[i] = self.spec.radius(n, None)?;
            }
        }
        self.decision = self.check_stop();
        Ok(self.decision.clone())
    }

    /// Steps until a decision or until `max_steps` steps have been taken.
    pub fn run(
        &mut self,
        mut trace: Option<&mut Vec<UnitStepRecord>>,
    ) -> Result<Option<UnitDecision>, UnitError> {
        while self.decision.is_none() && self.step < self.config.max_steps {
            self.step()?;
            if let Some(trace) = trace.as_deref_mut() {
                trace.push(self.record());
            }
        }
        Ok(self.decision.clone())
    }

    pub fn record(&self) -> UnitStepRecord {
        UnitStepRecord {
            step: self.step,
            allocated: self.allocated.clone(),
            units: [self.pops[0].num_units(), self.pops[1].num_units()],
            mean_of_means: [self.pops[0].mean_of_means(), self.pops[1].mean_of_means()],
            total_mean: [self.pops[0].total_mean(), self.pops[1].total_mean()],
            radii: [self.radius(0), self.radius(1)],
        }
    }

    fn allocate(&mut self) {
        self.allocated.clear();
        for _ in 0..self.config.arrivals_per_step {
            let target = match self.config.policy {
                UnitPolicyKind::EtcMm => {
                    let c = self.cursor;
                    self.cursor = 1 - c;
                    c
                }
                UnitPolicyKind::UcbMm => self.best_index(),
            };
            self.allocated.push(target);
        }
    }

    /// Highest index; an empty population has index +∞. Ties go to the
    /// population with fewer units (counting this step's arrivals), then
    /// to the lower index.
    fn best_index(&self) -> usize {
        let alpha = self.config.alpha.value();
        let key = |i: usize| {
            let pending = self.allocated.iter().filter(|&&a| a == i).count();
            let n = self.pops[i].num_units() + pending;
            let index = match self.pops[i].mean_of_means() {
                None => f64::INFINITY,
                Some(_) if alpha.is_infinite() => f64::INFINITY,
                Some(m) => m + alpha * self.eps[i],
            };
            (index, n)
        };
        let (a, b) = (key(0), key(1));
        if b.0 > a.0 || (b.0 == a.0 && b.1 < a.1) {
            1
        } else {
            0
        }
    }

    fn sample(&mut self) {
        let step = self.step;
        for i in 0..2 {
            let existing = self.pops[i].num_units();
            let arriving = self.allocated.iter().filter(|&&a| a == i).count();
            let total = existing + arriving;
            if total == 0 {
                continue;
            }
            self.buf.resize(total, 0.0);
            self.source.fill_noise(i, &mut self.buf[..total]);
            for (x, r) in self.buf[..existing].iter_mut().zip(&self.latent[i]) {
                *x += r;
            }
            self.pops[i]
                .ingest_samples(&self.buf[..existing])
                .expect("one sample per existing unit");
            for k in existing..total {
                let r = self.source.unit_mean(i);
                self.latent[i].push(r);
                self.pops[i].add_unit(step, r + self.buf[k]);
            }
        }
    }

    fn check_stop(&mut self) -> Option<UnitDecision> {
        let (na, nb) = (self.pops[0].num_units(), self.pops[1].num_units());
        let (ma, mb) = (self.pops[0].mean_of_means()?, self.pops[1].mean_of_means()?);
        let chosen = match self.config.policy {
            UnitPolicyKind::UcbMm => {
                for (i, m) in [ma, mb].into_iter().enumerate() {
                    if (m - self.config.r_means[i]).abs() > self.eps[i] {
                        self.concentration_held = false;
                    }
                }
                separated_winner(&[ma, mb], &self.eps)
            }
            UnitPolicyKind::EtcMm => {
                if na != nb {
                    return None;
                }
                let threshold = self.eps[0];
                let true_gap = self.config.r_means[0] - self.config.r_means[1];
                if ((ma - mb) - true_gap).abs() > threshold {
                    self.concentration_held = false;
                }
                ((ma - mb).abs() > threshold).then_some(if ma > mb { 0 } else { 1 })
            }
        }?;
        Some(UnitDecision { chosen_population: chosen, decision_step: self.step, units: [na, nb] })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::unit::GaussianUnits;

    fn source(seed: u64) -> GaussianUnits {
        GaussianUnits::new(&[0.0, 1.0], 1.0, 1.0, &[(seed, seed + 1), (seed + 2, seed + 3)])
    }

    #[test]
    fn infinite_alpha_alternates() {
        let cfg = UnitWorldConfig::ucb_mm(Alpha::INFINITY, [0.0, 1.0], 1.0, 1.0, 0.1);
        let mut world = UnitWorld::new(cfg, source(1)).unwrap();
        for step in 0..200 {
            if world.step().unwrap().is_some() {
                break;
            }
            assert_eq!(world.last_allocation(), &[step % 2]);
        }
    }

    #[test]
    fn mm_index_examples() {
        let spec = RadiusSpec::unit(RadiusFamily::MeanOfMeans, 1.0, 1.0, 0.1).unwrap();
        let mut pop = UnitPopulation::new();
        for _ in 0..10 {
            pop.add_unit(1, 0.3);
        }
        assert!((mm_index(&pop, &spec, Alpha::new(0.0).unwrap()).unwrap() - 0.3).abs() < 1e-15);
        let by_hand = 0.3 + 2.0 * 2.1515207199171726;
        assert!((mm_index(&pop, &spec, Alpha::new(2.0).unwrap()).unwrap() - by_hand).abs() < 1e-9);
        let noisy = RadiusSpec::unit(RadiusFamily::MeanOfMeans, 1.0, 50.0, 0.1).unwrap();
        let plain = RadiusSpec::iid(RadiusFamily::UcbIid, 1.0, 0.1).unwrap();
        let a = Alpha::new(2.0).unwrap();
        assert!(mm_index(&pop, &noisy, a).unwrap() > mm_index(&pop, &spec, a).unwrap());
        assert!(mm_index(&pop, &spec, a).unwrap() > 0.3 + 2.0 * plain.radius(10, None).unwrap());
        assert_eq!(
            mm_index(&UnitPopulation::new(), &spec, a),
            Err(UnitError::EmptyPopulation)
        );
    }

    #[test]
    fn etc_mm_regret_is_half_gap_times_units() {
        let cfg = UnitWorldConfig::etc_mm([0.0, 1.0], 1.0, 1.0, 0.1);
        let mut world = UnitWorld::new(cfg, source(5)).unwrap();
        let d = world.run(None).unwrap().unwrap();
        assert_eq!(d.units[0], d.units[1]);
        assert_eq!(d.units[0] as u64, d.decision_step);
        let regret = 1.0 * d.units[0] as f64;
        assert_eq!(regret, 0.5 * d.total_units() as f64);
    }

    #[test]
    fn etc_mm_label_swap_flips_identity_only() {
        let a = UnitWorldConfig::etc_mm([0.0, 1.0], 1.0, 1.0, 0.1);
        let b = UnitWorldConfig::etc_mm([1.0, 0.0], 1.0, 1.0, 0.1);
        for seed in 0..20 {
            let mut wa = UnitWorld::new(a.clone(), source(seed * 10)).unwrap();
            let swapped = GaussianUnits::new(
                &[1.0, 0.0],
                1.0,
                1.0,
                &[(seed * 10 + 2, seed * 10 + 3), (seed * 10, seed * 10 + 1)],
            );
            let mut wb = UnitWorld::new(b.clone(), swapped).unwrap();
            let (da, db) = (wa.run(None).unwrap().unwrap(), wb.run(None).unwrap().unwrap());
            assert_eq!(da.decision_step, db.decision_step);
            assert_eq!(da.chosen_population, 1 - db.chosen_population);
        }
    }

    #[test]
    fn terminal_world_rejects_steps() {
        let cfg = UnitWorldConfig::ucb_mm(Alpha::new(2.0).unwrap(), [0.0, 5.0], 1.0, 1.0, 0.1);
        let mut world = UnitWorld::new(cfg, source(3)).unwrap();
        let d = world.run(None).unwrap().unwrap();
        assert_eq!(d.chosen_population, 1);
        assert_eq!(world.step(), Err(UnitError::Terminal));
    }
}
