use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

/// Generator of latent unit means and observation noise, per population.
pub trait UnitSource {
    /// Latent mean `r_u` of a new unit in `population`.
    fn unit_mean(&mut self, population: usize) -> f64;
    /// Fills `out` with one noise draw `ε_{u,t}` per unit of `population`.
    fn fill_noise(&mut self, population: usize, out: &mut [f64]);
}

/// `r_u ~ N(r^i, σ_r²)`, `ε_{u,t} ~ N(0, σ_ε²)`, with separate streams for
/// unit means and noise in each population.
#[derive(Debug, Clone)]
pub struct GaussianUnits {
    means: Vec<f64>,
    sigma_r: f64,
    sigma_eps: f64,
    mean_streams: Vec<ChaCha8Rng>,
    noise_streams: Vec<ChaCha8Rng>,
}

impl GaussianUnits {
    /// `seeds[i] = (unit-mean seed, noise seed)` for population `i`.
    pub fn new(means: &[f64], sigma_r_sq: f64, sigma_eps_sq: f64, seeds: &[(u64, u64)]) -> Self {
        assert_eq!(means.len(), seeds.len());
        GaussianUnits {
            means: means.to_vec(),
            sigma_r: sigma_r_sq.sqrt(),
            sigma_eps: sigma_eps_sq.sqrt(),
            mean_streams: seeds.iter().map(|s| ChaCha8Rng::seed_from_u64(s.0)).collect(),
            noise_streams: seeds.iter().map(|s| ChaCha8Rng::seed_from_u64(s.1)).collect(),
        }
    }
}

impl UnitSource for GaussianUnits {
    fn unit_mean(&mut self, population: usize) -> f64 {
        let z: f64 = StandardNormal.sample(&mut self.mean_streams[population]);
        self.means[population] + self.sigma_r * z
    }

    fn fill_noise(&mut self, population: usize, out: &mut [f64]) {
        let rng = &mut self.noise_streams[population];
        let s = self.sigma_eps;
        for x in out.iter_mut() {
            let z: f64 = StandardNormal.sample(rng);
            *x = s * z;
        }
    }
}
