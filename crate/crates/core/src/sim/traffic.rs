use rand::distr::weighted::WeightedIndex;
use rand::Rng;
use rand_distr::Distribution;

use super::{FileId, NetworkTopology, RequestState, SimConfig};

/// Zipf popularity over ranks `1..=F`: `p(k) = k^-υ / Σ_j j^-υ`.
#[derive(Debug, Clone)]
pub struct ZipfPopularity {
    probabilities: Vec<f64>,
    index: WeightedIndex<f64>,
}

impl ZipfPopularity {
    pub fn new(num_files: usize, skew: f64) -> Self {
        assert!(num_files >= 1, "Zipf needs at least one file");
        let weights: Vec<f64> = (1..=num_files).map(|k| (k as f64).powf(-skew)).collect();
        let norm: f64 = weights.iter().sum();
        let probabilities = weights.iter().map(|w| w / norm).collect();
        let index = WeightedIndex::new(&weights).expect("positive Zipf weights");
        Self {
            probabilities,
            index,
        }
    }

    pub fn from_config(cfg: &SimConfig) -> Self {
        Self::new(cfg.num_files, cfg.zipf_skew)
    }

    pub fn probability(&self, file: FileId) -> f64 {
        self.probabilities[file.index()]
    }

    pub fn probabilities(&self) -> &[f64] {
        &self.probabilities
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> FileId {
        FileId::from_index(self.index.sample(rng))
    }

    /// One independent request per user.
    pub fn sample_requests<R: Rng + ?Sized>(&self, num_users: usize, rng: &mut R) -> RequestState {
        RequestState::new((0..num_users).map(|_| self.sample(rng)).collect())
    }
}

pub fn sample_requests<R: Rng + ?Sized>(
    cfg: &SimConfig,
    topology: &NetworkTopology,
    rng: &mut R,
) -> RequestState {
    ZipfPopularity::from_config(cfg).sample_requests(topology.num_users(), rng)
}
