use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

/// Produces the reward of the next pull of an arm.
pub trait RewardSource {
    fn reward(&mut self, arm: usize) -> f64;
}

impl<F: FnMut(usize) -> f64> RewardSource for F {
    fn reward(&mut self, arm: usize) -> f64 {
        self(arm)
    }
}

/// Gaussian arms, each with its own random stream.
///
/// The k-th reward of an arm depends only on that arm's seed and k, so two
/// policies fed from sources with the same seeds see the same draws for the
/// same pulls whatever order they pull the arms in.
#[derive(Debug, Clone)]
pub struct GaussianArms {
    means: Vec<f64>,
    sds: Vec<f64>,
    streams: Vec<ChaCha8Rng>,
}

impl GaussianArms {
    pub fn new(means: &[f64], variances: &[f64], seeds: &[u64]) -> Self {
        assert_eq!(means.len(), variances.len());
        assert_eq!(means.len(), seeds.len());
        GaussianArms {
            means: means.to_vec(),
            sds: variances.iter().map(|v| v.sqrt()).collect(),
            streams: seeds.iter().map(|&s| ChaCha8Rng::seed_from_u64(s)).collect(),
        }
    }

    pub fn means(&self) -> &[f64] {
        &self.means
    }
}

impl RewardSource for GaussianArms {
    fn reward(&mut self, arm: usize) -> f64 {
        let z: f64 = StandardNormal.sample(&mut self.streams[arm]);
        self.means[arm] + self.sds[arm] * z
    }
}
