use serde::{Deserialize, Serialize};

use super::{UnitError, UnitPopulation, UnitSource};
use crate::concentration::{RadiusFamily, RadiusSpec};

fn gap_test(
    a: &UnitPopulation,
    b: &UnitPopulation,
    t: u64,
    spec: &RadiusSpec,
    family: RadiusFamily,
) -> Result<Option<usize>, UnitError> {
    if a.num_units() != b.num_units() {
        return Err(UnitError::UnequalPopulations { a: a.num_units(), b: b.num_units() });
    }
    let (ma, mb) = match (a.mean_of_means(), b.mean_of_means()) {
        (Some(ma), Some(mb)) => (ma, mb),
        _ => return Err(UnitError::EmptyPopulation),
    };
    let spec = spec.with_family(family)?;
    let threshold = spec.radius(a.num_units() as u64, Some(t))?;
    Ok(((ma - mb).abs() > threshold).then_some(if ma > mb { 0 } else { 1 }))
}

/// Test at horizon `T` on two static populations of equal size: a winner
/// when the gap in mean-of-means exceeds `√(8(σ_r² + σ_ε²/T)·log(1/δ)/n)`.
pub fn static_fixed_horizon_test(
    a: &UnitPopulation,
    b: &UnitPopulation,
    horizon: u64,
    spec: &RadiusSpec,
) -> Result<Option<usize>, UnitError> {
    gap_test(a, b, horizon, spec, RadiusFamily::StaticFixedHorizon)
}

/// Anytime test at step `t`, threshold
/// `√(8σ_r²·log(2/δ)/n) + √(8σ_ε²·log(3 log²t/δ)/(t·n))`.
///
/// The first term does not shrink with `t`, so with
/// `n < 32σ_r²/Δ²·log(2/δ)` the threshold may stay above the true gap forever.
pub fn static_anytime_test(
    a: &UnitPopulation,
    b: &UnitPopulation,
    t: u64,
    spec: &RadiusSpec,
) -> Result<Option<usize>, UnitError> {
    gap_test(a, b, t, spec, RadiusFamily::StaticAnytime)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StaticOutcome {
    pub chosen_population: Option<usize>,
    /// Step of the decision, or of the last step run without one.
    pub step: u64,
    pub units_per_population: usize,
}

/// Two populations of `n` units each, all present from step 1.
#[derive(Debug, Clone)]
pub struct StaticWorld<S> {
    pops: [UnitPopulation; 2],
    latent: [Vec<f64>; 2],
    source: S,
    spec: RadiusSpec,
    step: u64,
    buf: Vec<f64>,
}

impl<S: UnitSource> StaticWorld<S> {
    pub fn new(n: usize, spec: RadiusSpec, mut source: S) -> Result<Self, UnitError> {
        if n == 0 {
            return Err(UnitError::EmptyPopulation);
        }
        let latent = [0, 1].map(|i| (0..n).map(|_| source.unit_mean(i)).collect::<Vec<_>>());
        Ok(StaticWorld {
            pops: [UnitPopulation::new(), UnitPopulation::new()],
            latent,
            source,
            spec,
            step: 0,
            buf: vec![0.0; n],
        })
    }

    pub fn populations(&self) -> &[UnitPopulation; 2] {
        &self.pops
    }

    pub fn latent_means(&self, population: usize) -> &[f64] {
        &self.latent[population]
    }

    pub fn spec(&self) -> &RadiusSpec {
        &self.spec
    }

    pub fn step_count(&self) -> u64 {
        self.step
    }

    pub fn step(&mut self) {
        self.step += 1;
        for i in 0..2 {
            self.source.fill_noise(i, &mut self.buf);
            for (x, r) in self.buf.iter_mut().zip(&self.latent[i]) {
                *x += r;
            }
            if self.pops[i].is_empty() {
                for &x in &self.buf {
                    self.pops[i].add_unit(1, x);
                }
            } else {
                self.pops[i].ingest_samples(&self.buf).expect("one sample per unit");
            }
        }
    }

    /// Samples until step `horizon`, then applies the fixed-horizon test.
    pub fn run_fixed(&mut self, horizon: u64) -> Result<StaticOutcome, UnitError> {
        while self.step < horizon {
            self.step();
        }
        let chosen = static_fixed_horizon_test(&self.pops[0], &self.pops[1], horizon, &self.spec)?;
        Ok(self.outcome(chosen))
    }

    /// Applies the anytime test after every step, up to `max_steps`.
    pub fn run_anytime(&mut self, max_steps: u64) -> Result<StaticOutcome, UnitError> {
        while self.step < max_steps {
            self.step();
            let chosen = static_anytime_test(&self.pops[0], &self.pops[1], self.step, &self.spec)?;
            if chosen.is_some() {
                return Ok(self.outcome(chosen));
            }
        }
        Ok(self.outcome(None))
    }

    fn outcome(&self, chosen: Option<usize>) -> StaticOutcome {
        StaticOutcome {
            chosen_population: chosen,
            step: self.step,
            units_per_population: self.pops[0].num_units(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::concentration::static_sample_bound;

    fn pops(ma: f64, mb: f64, n: usize) -> (UnitPopulation, UnitPopulation) {
        let mut a = UnitPopulation::new();
        let mut b = UnitPopulation::new();
        for _ in 0..n {
            a.add_unit(1, ma);
            b.add_unit(1, mb);
        }
        (a, b)
    }

    #[test]
    fn minimal_n_makes_threshold_half_the_gap() {
        // At n = 32(σ_r² + σ_ε²/T)/Δ²·log(1/δ) the threshold is exactly Δ/2.
        let (sr, se, t, delta, gap) = (1.0, 1.0, 10u64, (-2.0f64).exp(), 1.0);
        let exact_n = 32.0 * (sr + se / t as f64) / (gap * gap) * (1.0 / delta).ln();
        let spec = RadiusSpec::unit(RadiusFamily::StaticFixedHorizon, sr, se, delta).unwrap();
        let threshold = (8.0 * (sr + se / t as f64) * (1.0 / delta).ln() / exact_n).sqrt();
        assert!((threshold - gap / 2.0).abs() < 1e-12);
        let n = static_sample_bound(t, gap, sr, se, delta).unwrap();
        assert!(spec.radius(n, Some(t)).unwrap() <= gap / 2.0);
    }

    #[test]
    fn fixed_horizon_limits() {
        let (a, b) = pops(0.01, 0.0, 10);
        let loose = RadiusSpec::unit(RadiusFamily::StaticFixedHorizon, 1.0, 1.0, 1.0 - 1e-12)
            .unwrap();
        assert_eq!(static_fixed_horizon_test(&a, &b, 5, &loose).unwrap(), Some(0));
        let no_noise = RadiusSpec::unit(RadiusFamily::StaticFixedHorizon, 1.0, 0.0, 0.1).unwrap();
        let pure = (8.0 * 10f64.ln() / 10.0).sqrt();
        assert!((no_noise.radius(10, Some(5)).unwrap() - pure).abs() < 1e-12);
        let (c, _) = pops(0.0, 0.0, 3);
        assert!(matches!(
            static_fixed_horizon_test(&a, &c, 5, &loose),
            Err(UnitError::UnequalPopulations { .. })
        ));
    }

    #[test]
    fn anytime_threshold_decreases_to_first_term() {
        let spec = RadiusSpec::unit(RadiusFamily::StaticAnytime, 1.0, 1.0, 0.1).unwrap();
        let first = (8.0 * 20f64.ln() / 100.0).sqrt();
        let mut prev = f64::INFINITY;
        for t in [1, 10, 100, 10_000, 1_000_000, 1_000_000_000] {
            let r = spec.radius(100, Some(t)).unwrap();
            assert!(r < prev && r > first);
            prev = r;
        }
        assert!(prev - first < 1e-3);
    }

    #[test]
    fn undersized_population_never_clears_gap() {
        // n below 32σ_r²/Δ²·log(2/δ): the first term alone exceeds Δ/2.
        let (gap, delta) = (1.0, 0.1);
        let n = (32.0 * (2.0f64 / delta).ln() / (gap * gap)).floor() as u64;
        let spec = RadiusSpec::unit(RadiusFamily::StaticAnytime, 1.0, 1.0, delta).unwrap();
        assert!((8.0 * (2.0f64 / delta).ln() / n as f64).sqrt() > gap / 2.0);
        assert!(spec.radius(n, Some(u64::MAX)).unwrap() > gap / 2.0);
    }
}
