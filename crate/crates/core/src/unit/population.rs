use serde::{Deserialize, Serialize};

use super::UnitError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UnitRecord {
    pub arrival_step: u64,
    pub sample_count: u64,
    pub running_mean: f64,
    pub running_sum: f64,
}

/// Units allocated to one population, with the accumulators behind the
/// mean-of-means and total-mean estimators.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct UnitPopulation {
    units: Vec<UnitRecord>,
    sum_of_unit_means: f64,
    total_sum: f64,
    total_samples: u64,
}

impl UnitPopulation {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn units(&self) -> &[UnitRecord] {
        &self.units
    }

    pub fn num_units(&self) -> usize {
        self.units.len()
    }

    pub fn is_empty(&self) -> bool {
        self.units.is_empty()
    }

    pub fn total_samples(&self) -> u64 {
        self.total_samples
    }

    pub fn add_unit(&mut self, arrival_step: u64, first_sample: f64) {
        self.units.push(UnitRecord {
            arrival_step,
            sample_count: 1,
            running_mean: first_sample,
            running_sum: first_sample,
        });
        self.sum_of_unit_means += first_sample;
        self.total_sum += first_sample;
        self.total_samples += 1;
    }

    /// One new sample per existing unit, in unit order.
    pub fn ingest_samples(&mut self, samples: &[f64]) -> Result<(), UnitError> {
        if samples.len() != self.units.len() {
            return Err(UnitError::SampleCountMismatch {
                expected: self.units.len(),
                got: samples.len(),
            });
        }
        let mut mean_shift = 0.0;
        let mut batch_sum = 0.0;
        for (unit, &x) in self.units.iter_mut().zip(samples) {
            unit.sample_count += 1;
            unit.running_sum += x;
            let step = (x - unit.running_mean) / unit.sample_count as f64;
            unit.running_mean += step;
            mean_shift += step;
            batch_sum += x;
        }
        self.sum_of_unit_means += mean_shift;
        self.total_sum += batch_sum;
        self.total_samples += samples.len() as u64;
        Ok(())
    }

    /// Average over units of each unit's running mean.
    pub fn mean_of_means(&self) -> Option<f64> {
        (!self.units.is_empty()).then(|| self.sum_of_unit_means / self.units.len() as f64)
    }

    /// Grand average over all samples; weights older units more.
    pub fn total_mean(&self) -> Option<f64> {
        (self.total_samples > 0).then(|| self.total_sum / self.total_samples as f64)
    }

    /// Both estimators recomputed from the per-unit sums.
    pub fn recompute(&self) -> (Option<f64>, Option<f64>) {
        if self.units.is_empty() {
            return (None, None);
        }
        let mm = self.units.iter().map(|u| u.running_sum / u.sample_count as f64).sum::<f64>()
            / self.units.len() as f64;
        let sum: f64 = self.units.iter().map(|u| u.running_sum).sum();
        let count: u64 = self.units.iter().map(|u| u.sample_count).sum();
        (Some(mm), Some(sum / count as f64))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hand_computed_estimators() {
        let mut pop = UnitPopulation::new();
        pop.add_unit(1, 1.0);
        pop.ingest_samples(&[3.0]).unwrap();
        pop.add_unit(2, 2.0);
        assert_eq!(pop.mean_of_means(), Some(2.0));
        assert_eq!(pop.total_mean(), Some(2.0));
        assert_eq!(pop.units()[0].sample_count, 2);
    }

    #[test]
    fn add_unit_examples() {
        let mut pop = UnitPopulation::new();
        assert_eq!(pop.mean_of_means(), None);
        pop.add_unit(1, 5.0);
        assert_eq!(pop.mean_of_means(), Some(5.0));

        let mut pop = UnitPopulation::new();
        pop.add_unit(1, 0.0);
        pop.add_unit(1, 2.0);
        assert_eq!(pop.mean_of_means(), Some(1.0));
    }

    #[test]
    fn constant_samples() {
        let mut pop = UnitPopulation::new();
        for step in 1..=30 {
            let n = pop.num_units();
            pop.ingest_samples(&vec![0.7; n]).unwrap();
            pop.add_unit(step, 0.7);
        }
        assert!((pop.mean_of_means().unwrap() - 0.7).abs() < 1e-12);
        assert!((pop.total_mean().unwrap() - 0.7).abs() < 1e-12);
    }

    #[test]
    fn estimators_differ_on_unbalanced_history() {
        let mut pop = UnitPopulation::new();
        pop.add_unit(1, 0.0);
        for _ in 0..9 {
            pop.ingest_samples(&[0.0]).unwrap();
        }
        pop.add_unit(10, 1.0);
        // Ten samples of 0 from the old unit, one sample of 1 from the new one.
        assert_eq!(pop.mean_of_means(), Some(0.5));
        assert!((pop.total_mean().unwrap() - 1.0 / 11.0).abs() < 1e-15);
    }

    #[test]
    fn mismatch_is_rejected() {
        let mut pop = UnitPopulation::new();
        pop.add_unit(1, 0.0);
        assert_eq!(
            pop.ingest_samples(&[1.0, 2.0]),
            Err(UnitError::SampleCountMismatch { expected: 1, got: 2 })
        );
    }
}
