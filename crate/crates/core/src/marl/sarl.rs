//! Single-agent baseline: one Q-network sees the whole network and picks
//! every edge's action from its own output head, trained on the summed reward.

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::action::CacheAction;
use super::encode::{Dims, GameState};
use super::replay::{ReplayBuffer, Transition};
use super::{clip_gradient, LearnerParams};
use crate::nn::{argmax, Mlp, Optimizer, Trace};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sarl {
    dims: Dims,
    params: LearnerParams,
    q: Mlp,
    target: Mlp,
    opt: Optimizer,
    replay: ReplayBuffer<Transition>,
    updates: u64,
}

impl Sarl {
    pub fn new<R: Rng + ?Sized>(dims: Dims, params: LearnerParams, rng: &mut R) -> Self {
        let q = Mlp::new(
            &params.layer_sizes(dims.global_state_len(), dims.edges * dims.actions()),
            rng,
        );
        Self {
            opt: Optimizer::new(params.optimizer, params.learning_rate, q.params().len()),
            target: q.clone(),
            replay: ReplayBuffer::new(params.replay_capacity),
            q,
            dims,
            params,
            updates: 0,
        }
    }

    pub fn network(&self) -> &Mlp {
        &self.q
    }

    pub fn network_mut(&mut self) -> &mut Mlp {
        &mut self.q
    }

    pub fn replay(&self) -> &ReplayBuffer<Transition> {
        &self.replay
    }

    pub fn updates(&self) -> u64 {
        self.updates
    }

    fn global(&self, state: &GameState) -> Vec<f64> {
        let mut x = vec![0.0; self.dims.global_state_len()];
        self.dims.global_state_into(state, &mut x);
        x
    }

    /// Q-values of the whole state, one head of `F1·F + 1` entries per edge.
    pub fn q_values(&self, state: &GameState) -> Vec<f64> {
        self.q.forward(&self.global(state))
    }

    pub fn act<R: Rng + ?Sized>(&self, state: &GameState, epsilon: f64, rng: &mut R) -> Vec<CacheAction> {
        let q = self.q_values(state);
        let n = self.dims.actions();
        q.chunks_exact(n)
            .map(|head| {
                if epsilon > 0.0 && rng.random::<f64>() < epsilon {
                    CacheAction(rng.random_range(0..n) as u32)
                } else {
                    CacheAction(argmax(head) as u32)
                }
            })
            .collect()
    }

    pub fn store(&mut self, transition: Transition) {
        self.replay.push(transition);
    }

    /// Per head `y_e = R + γ max_a Q'_e(s', a)` with `R = Σ_e r_e`.
    pub fn loss(&self, batch: &[&Transition]) -> (f64, Vec<f64>) {
        let n_act = self.dims.actions();
        let scale = 1.0 / (batch.len() * self.dims.edges) as f64;
        let mut grad = vec![0.0; self.q.params().len()];
        let mut trace = Trace::default();
        let mut loss = 0.0;
        for t in batch {
            let total: f64 = t.rewards.iter().sum();
            let next_q = if self.params.gamma == 0.0 {
                Vec::new()
            } else {
                self.target.forward(&self.global(&t.next))
            };
            self.q.forward_traced(&self.global(&t.state), &mut trace);
            let out = trace.output();
            let mut g_out = vec![0.0; out.len()];
            for (e, a) in t.actions.iter().enumerate() {
                let best = if next_q.is_empty() {
                    0.0
                } else {
                    next_q[e * n_act..(e + 1) * n_act]
                        .iter()
                        .copied()
                        .fold(f64::NEG_INFINITY, f64::max)
                };
                let y = total + self.params.gamma * best;
                let i = e * n_act + a.index();
                let err = out[i] - y;
                loss += err * err * scale;
                g_out[i] = 2.0 * err * scale;
            }
            self.q.backward(&trace, &g_out, &mut grad);
        }
        (loss, grad)
    }

    pub fn train_step<R: Rng + ?Sized>(&mut self, rng: &mut R) -> Option<f64> {
        let batch_size = self.params.batch_size.max(1);
        if self.replay.len() < batch_size {
            return None;
        }
        let idx = self.replay.sample_indices(batch_size, rng);
        let refs: Vec<&Transition> = idx.iter().map(|&i| self.replay.get(i)).collect();
        let (loss, mut grad) = self.loss(&refs);
        clip_gradient(&mut grad, self.params.max_grad_norm);
        self.opt.step(self.q.params_mut(), &grad);
        self.target.track(&self.q, self.params.tau);
        self.updates += 1;
        Some(loss)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::OptimizerKind;
    use crate::rng::{stream, Stream};
    use crate::sim::FileId;

    fn single_edge() -> Dims {
        Dims {
            edges: 1,
            files: 2,
            slots: 1,
        }
    }

    fn state() -> GameState {
        GameState {
            requested: vec![vec![FileId(2)]],
            cached: vec![vec![Some(FileId(1))]],
        }
    }

    #[test]
    fn greedy_action_is_head_argmax() {
        let mut rng = stream(1, Stream::Policy);
        let d = Dims {
            edges: 2,
            files: 2,
            slots: 1,
        };
        let mut s = Sarl::new(d, LearnerParams { hidden: 4, ..LearnerParams::default() }, &mut rng);
        // zero weights; output biases act as a fixed Q-table
        let p = s.network_mut().params_mut();
        p.fill(0.0);
        let len = p.len();
        let bias = &mut p[len - 6..];
        bias.copy_from_slice(&[0.1, 0.5, 0.2, 0.9, 0.0, -1.0]);
        let st = GameState {
            requested: vec![vec![FileId(1)], vec![FileId(2)]],
            cached: vec![vec![Some(FileId(1))], vec![Some(FileId(2))]],
        };
        assert_eq!(s.act(&st, 0.0, &mut rng), vec![CacheAction(1), CacheAction(0)]);
    }

    #[test]
    fn loss_with_zero_network_is_mean_square_total_reward() {
        let mut rng = stream(2, Stream::Policy);
        let mut s = Sarl::new(single_edge(), LearnerParams { gamma: 0.0, hidden: 4, ..LearnerParams::default() }, &mut rng);
        s.network_mut().params_mut().fill(0.0);
        let t = Transition {
            state: state(),
            actions: vec![CacheAction(2)],
            rewards: vec![1.5],
            next: state(),
        };
        let (loss, _) = s.loss(&[&t]);
        assert!((loss - 2.25).abs() < 1e-12);
    }

    #[test]
    fn learns_single_edge_bandit() {
        let p = LearnerParams {
            hidden: 16,
            batch_size: 16,
            learning_rate: 0.01,
            optimizer: OptimizerKind::Adam,
            gamma: 0.0,
            tau: 0.05,
            ..LearnerParams::default()
        };
        let mut rng = stream(3, Stream::Policy);
        let mut s = Sarl::new(single_edge(), p, &mut rng);
        let st = state();
        for _ in 0..400 {
            let a = CacheAction(rng.random_range(0..3));
            let after = st.slots_after(0, a, 2);
            let reward = if after[0] == Some(FileId(2)) { 1.0 } else { 0.0 };
            s.store(Transition {
                state: st.clone(),
                actions: vec![a],
                rewards: vec![reward],
                next: st.clone(),
            });
            s.train_step(&mut rng);
        }
        assert_eq!(s.act(&st, 0.0, &mut rng), vec![CacheAction(2)]);
    }
}
