//! Caching as a Markov game: one actor/critic agent per edge server trained
//! with centralised critics, plus a single-agent Q-learning baseline.

pub mod action;
pub mod encode;
pub mod maddpg;
pub mod replay;
pub mod sarl;

use serde::{Deserialize, Serialize};

use crate::nn::OptimizerKind;
use crate::sim::{DelayReport, NetworkTopology};

pub use action::{apply_cache_action, decode_action, encode_action, CacheAction, Decoded};
pub use encode::{Dims, GameState};
pub use maddpg::{select_action, AgentBundle, Maddpg, Relaxation};
pub use replay::{ReplayBuffer, Transition};
pub use sarl::Sarl;

/// Which delay a caching agent is rewarded on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RewardKind {
    /// Reciprocal of the delay of the users linked to the edge, with the
    /// per-server rate.
    EdgeDelay,
    /// Reciprocal of the total delay (edge or cloud) of every user the edge
    /// covers, so misses are charged to the servers that could have served
    /// them.
    CoveredDelay,
    /// Mean of `1 / delay` over the users the edge covers.
    CoveredRate,
}

/// `r_e = 1 / Σ_u s_f / R_{e,u}`; an edge that served nobody earns 0.
pub fn compute_reward(edge: usize, report: &DelayReport) -> f64 {
    reciprocal(report.per_edge_delay[edge])
}

pub fn training_reward(
    kind: RewardKind,
    edge: usize,
    report: &DelayReport,
    topology: &NetworkTopology,
) -> f64 {
    match kind {
        RewardKind::EdgeDelay => compute_reward(edge, report),
        RewardKind::CoveredDelay => reciprocal(
            topology
                .users_covered_by(edge)
                .iter()
                .map(|&u| report.per_user_delay[u])
                .sum(),
        ),
        RewardKind::CoveredRate => {
            let users = topology.users_covered_by(edge);
            if users.is_empty() {
                return 0.0;
            }
            users
                .iter()
                .map(|&u| reciprocal(report.per_user_delay[u]))
                .sum::<f64>()
                / users.len() as f64
        }
    }
}

fn full_run() -> f64 {
    1.0
}

fn reciprocal(delay: f64) -> f64 {
    if delay > 0.0 && delay.is_finite() {
        1.0 / delay
    } else {
        0.0
    }
}

/// Learner hyperparameters. Defaults follow the published table: replay 10⁵,
/// learning rate 1.5·10⁻⁴, target mixing 0.001, discount 0.95, exploration
/// 0.03 → 0, batch 512, hidden width 128, plain gradient descent.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LearnerParams {
    pub replay_capacity: usize,
    pub learning_rate: f64,
    pub optimizer: OptimizerKind,
    pub tau: f64,
    pub gamma: f64,
    pub eps_start: f64,
    pub eps_end: f64,
    /// Fraction of the run over which exploration anneals; it then stays at
    /// `eps_end`.
    #[serde(default = "full_run")]
    pub eps_decay_fraction: f64,
    pub batch_size: usize,
    pub hidden: usize,
    pub hidden_layers: usize,
    pub gumbel_temperature: f64,
    pub logit_penalty: f64,
    /// Global gradient-norm clip; non-positive disables it.
    pub max_grad_norm: f64,
    pub relaxation: Relaxation,
    pub reward: RewardKind,
}

impl Default for LearnerParams {
    fn default() -> Self {
        Self {
            replay_capacity: 100_000,
            learning_rate: 1.5e-4,
            optimizer: OptimizerKind::Sgd,
            tau: 0.001,
            gamma: 0.95,
            eps_start: 0.03,
            eps_end: 0.0,
            eps_decay_fraction: 1.0,
            batch_size: 512,
            hidden: 128,
            hidden_layers: 1,
            gumbel_temperature: 1.0,
            logit_penalty: 1e-3,
            max_grad_norm: 0.0,
            relaxation: Relaxation::StraightThrough,
            reward: RewardKind::CoveredDelay,
        }
    }
}

impl LearnerParams {
    pub fn layer_sizes(&self, input: usize, output: usize) -> Vec<usize> {
        let mut sizes = vec![input];
        sizes.extend(std::iter::repeat_n(self.hidden, self.hidden_layers));
        sizes.push(output);
        sizes
    }

    /// Linear annealing from `eps_start` to `eps_end` over the first
    /// `eps_decay_fraction` of `horizon` steps.
    pub fn epsilon_at(&self, step: u64, horizon: u64) -> f64 {
        let span = horizon as f64 * self.eps_decay_fraction;
        let frac = if span <= 0.0 { 1.0 } else { (step as f64 / span).min(1.0) };
        self.eps_start + (self.eps_end - self.eps_start) * frac
    }
}

pub(crate) fn clip_gradient(grad: &mut [f64], max_norm: f64) {
    if max_norm <= 0.0 {
        return;
    }
    let norm = grad.iter().map(|g| g * g).sum::<f64>().sqrt();
    if norm > max_norm {
        let s = max_norm / norm;
        grad.iter_mut().for_each(|g| *g *= s);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn report(per_edge: Vec<f64>) -> DelayReport {
        DelayReport {
            edge_delay: 0.0,
            cloud_delay: 0.0,
            total: 0.0,
            per_edge_delay: per_edge,
            per_user_delay: vec![],
            per_user_rate: vec![],
            edge_served: vec![],
            hit_count: 0,
            miss_count: 0,
        }
    }

    #[test]
    fn reward_is_reciprocal_delay() {
        let r = report(vec![0.5, 1.0, 0.0]);
        assert_eq!(compute_reward(0, &r), 2.0);
        assert_eq!(compute_reward(1, &r), 1.0);
        assert_eq!(compute_reward(2, &r), 0.0);
    }

    #[test]
    fn epsilon_anneals_to_final_value() {
        let p = LearnerParams::default();
        assert_eq!(p.epsilon_at(0, 100), 0.03);
        assert!((p.epsilon_at(50, 100) - 0.015).abs() < 1e-15);
        assert_eq!(p.epsilon_at(500, 100), 0.0);
        let early = LearnerParams {
            eps_decay_fraction: 0.5,
            ..p
        };
        assert!((early.epsilon_at(25, 100) - 0.015).abs() < 1e-15);
        assert_eq!(early.epsilon_at(60, 100), 0.0);
    }
}
