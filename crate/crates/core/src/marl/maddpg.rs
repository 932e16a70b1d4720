use rand::Rng;
use rand_distr::{Distribution, Gumbel};
use serde::{Deserialize, Serialize};

use super::action::CacheAction;
use super::encode::{Dims, GameState};
use super::replay::{ReplayBuffer, Transition};
use super::{clip_gradient, LearnerParams};
use crate::nn::{argmax, softmax, Mlp, Optimizer, Trace};

/// How the actor's categorical output is fed to the critic during the actor
/// update.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Relaxation {
    /// Hard one-hot in the forward pass, Gumbel-softmax gradient backward.
    StraightThrough,
    /// Gumbel-softmax probabilities in both passes.
    Soft,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgentBundle {
    pub actor: Mlp,
    pub critic: Mlp,
    pub target_actor: Mlp,
    pub target_critic: Mlp,
    pub actor_opt: Optimizer,
    pub critic_opt: Optimizer,
}

impl AgentBundle {
    pub fn new<R: Rng + ?Sized>(dims: &Dims, params: &LearnerParams, rng: &mut R) -> Self {
        let actor = Mlp::new(&params.layer_sizes(dims.observation_len(), dims.actions()), rng);
        let critic = Mlp::new(&params.layer_sizes(dims.critic_input_len(), 1), rng);
        Self {
            actor_opt: Optimizer::new(params.optimizer, params.learning_rate, actor.params().len()),
            critic_opt: Optimizer::new(params.optimizer, params.learning_rate, critic.params().len()),
            target_actor: actor.clone(),
            target_critic: critic.clone(),
            actor,
            critic,
        }
    }
}

/// ε-greedy over the actor's logits.
pub fn select_action<R: Rng + ?Sized>(
    actor: &Mlp,
    observation: &[f64],
    epsilon: f64,
    rng: &mut R,
) -> CacheAction {
    if epsilon > 0.0 && rng.random::<f64>() < epsilon {
        return CacheAction(rng.random_range(0..actor.output_dim()) as u32);
    }
    CacheAction(argmax(&actor.forward(observation)) as u32)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrainStats {
    pub critic_loss: f64,
    pub actor_loss: f64,
}

/// Multi-agent actor-critic learner with one decentralised actor and one
/// centralised critic per edge.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Maddpg {
    dims: Dims,
    params: LearnerParams,
    agents: Vec<AgentBundle>,
    replay: ReplayBuffer<Transition>,
    updates: u64,
}

impl Maddpg {
    pub fn new<R: Rng + ?Sized>(dims: Dims, params: LearnerParams, rng: &mut R) -> Self {
        let agents = (0..dims.edges)
            .map(|_| AgentBundle::new(&dims, &params, rng))
            .collect();
        Self {
            replay: ReplayBuffer::new(params.replay_capacity),
            dims,
            params,
            agents,
            updates: 0,
        }
    }

    pub fn dims(&self) -> &Dims {
        &self.dims
    }

    pub fn params(&self) -> &LearnerParams {
        &self.params
    }

    pub fn agents(&self) -> &[AgentBundle] {
        &self.agents
    }

    pub fn agents_mut(&mut self) -> &mut [AgentBundle] {
        &mut self.agents
    }

    pub fn replay(&self) -> &ReplayBuffer<Transition> {
        &self.replay
    }

    pub fn updates(&self) -> u64 {
        self.updates
    }

    pub fn act<R: Rng + ?Sized>(&self, state: &GameState, epsilon: f64, rng: &mut R) -> Vec<CacheAction> {
        let mut obs = vec![0.0; self.dims.observation_len()];
        self.agents
            .iter()
            .enumerate()
            .map(|(e, agent)| {
                self.dims.observation_into(state, e, &mut obs);
                select_action(&agent.actor, &obs, epsilon, rng)
            })
            .collect()
    }

    pub fn store(&mut self, transition: Transition) {
        self.replay.push(transition);
    }

    /// One minibatch update of every critic and actor followed by the soft
    /// target update. Does nothing until the buffer holds a full batch.
    pub fn train_step<R: Rng + ?Sized>(&mut self, rng: &mut R) -> Option<TrainStats> {
        let batch_size = self.params.batch_size.max(1);
        if self.replay.len() < batch_size {
            return None;
        }
        let idx = self.replay.sample_indices(batch_size, rng);
        let batch: Vec<Transition> = idx.iter().map(|&i| self.replay.get(i).clone()).collect();
        let refs: Vec<&Transition> = batch.iter().collect();
        let targets = self.critic_targets(&refs);
        let gumbel = Gumbel::new(0.0, 1.0).expect("unit gumbel");
        let mut stats = TrainStats {
            critic_loss: 0.0,
            actor_loss: 0.0,
        };
        for e in 0..self.dims.edges {
            let y: Vec<f64> = targets.iter().map(|t| t[e]).collect();
            let (loss, mut grad) = self.critic_loss(e, &refs, &y);
            stats.critic_loss += loss;
            clip_gradient(&mut grad, self.params.max_grad_norm);
            let agent = &mut self.agents[e];
            agent.critic_opt.step(agent.critic.params_mut(), &grad);

            let noise: Vec<Vec<f64>> = (0..refs.len())
                .map(|_| (0..self.dims.actions()).map(|_| gumbel.sample(rng)).collect())
                .collect();
            let (loss, mut grad) = self.actor_objective(e, &refs, &noise);
            stats.actor_loss += loss;
            clip_gradient(&mut grad, self.params.max_grad_norm);
            let agent = &mut self.agents[e];
            agent.actor_opt.step(agent.actor.params_mut(), &grad);
        }
        self.soft_update_targets();
        self.updates += 1;
        Some(stats)
    }

    /// `y_e = r_e + γ Q'_e(s', a')` with `a'` the target actors' greedy
    /// actions on `s'`. Indexed `[sample][edge]`.
    pub fn critic_targets(&self, batch: &[&Transition]) -> Vec<Vec<f64>> {
        let mut obs = vec![0.0; self.dims.observation_len()];
        let mut input = vec![0.0; self.dims.critic_input_len()];
        batch
            .iter()
            .map(|t| {
                let next_actions: Vec<CacheAction> = self
                    .agents
                    .iter()
                    .enumerate()
                    .map(|(e, a)| {
                        self.dims.observation_into(&t.next, e, &mut obs);
                        CacheAction(argmax(&a.target_actor.forward(&obs)) as u32)
                    })
                    .collect();
                self.dims.critic_input_into(&t.next, &next_actions, &mut input);
                self.agents
                    .iter()
                    .enumerate()
                    .map(|(e, a)| {
                        let q = if self.params.gamma == 0.0 {
                            0.0
                        } else {
                            a.target_critic.forward(&input)[0]
                        };
                        t.rewards[e] + self.params.gamma * q
                    })
                    .collect()
            })
            .collect()
    }

    /// Mean squared TD error of critic `edge` and its parameter gradient.
    pub fn critic_loss(&self, edge: usize, batch: &[&Transition], targets: &[f64]) -> (f64, Vec<f64>) {
        let critic = &self.agents[edge].critic;
        let mut grad = vec![0.0; critic.params().len()];
        let mut input = vec![0.0; self.dims.critic_input_len()];
        let mut trace = Trace::default();
        let n = batch.len() as f64;
        let mut loss = 0.0;
        for (t, &y) in batch.iter().zip(targets) {
            self.dims.critic_input_into(&t.state, &t.actions, &mut input);
            critic.forward_traced(&input, &mut trace);
            let err = trace.output()[0] - y;
            loss += err * err / n;
            critic.backward(&trace, &[2.0 * err / n], &mut grad);
        }
        (loss, grad)
    }

    /// Actor loss `−mean Q_e(s, a_e ~ π_e, a_−e) + penalty · mean logit²` and
    /// its parameter gradient, with Gumbel noise supplied per sample.
    pub fn actor_objective(&self, edge: usize, batch: &[&Transition], noise: &[Vec<f64>]) -> (f64, Vec<f64>) {
        let agent = &self.agents[edge];
        let dims = &self.dims;
        let n_actions = dims.actions();
        let temp = self.params.gumbel_temperature;
        let penalty = self.params.logit_penalty;
        let n = batch.len() as f64;
        let off = dims.mask_offset(edge);
        let mut grad = vec![0.0; agent.actor.params().len()];
        let mut obs = vec![0.0; dims.observation_len()];
        let mut input = vec![0.0; dims.critic_input_len()];
        let mut actor_trace = Trace::default();
        let mut critic_trace = Trace::default();
        let mut loss = 0.0;
        for (t, g) in batch.iter().zip(noise) {
            dims.observation_into(&t.state, edge, &mut obs);
            agent.actor.forward_traced(&obs, &mut actor_trace);
            let logits = actor_trace.output();
            let perturbed: Vec<f64> = logits.iter().zip(g).map(|(l, g)| (l + g) / temp).collect();
            let soft = softmax(&perturbed);
            let probs = match self.params.relaxation {
                Relaxation::Soft => soft.clone(),
                Relaxation::StraightThrough => {
                    let mut hard = vec![0.0; n_actions];
                    hard[argmax(&soft)] = 1.0;
                    hard
                }
            };
            dims.critic_input_into(&t.state, &t.actions, &mut input);
            dims.relaxed_mask_into(&t.state, edge, &probs, &mut input[off..off + dims.files]);
            agent.critic.forward_traced(&input, &mut critic_trace);
            let q = critic_trace.output()[0];
            let sq: f64 = logits.iter().map(|l| l * l).sum::<f64>() / n_actions as f64;
            loss += (-q + penalty * sq) / n;

            let grad_in = agent.critic.input_gradient(&critic_trace, &[-1.0 / n]);
            let g_probs = dims.mask_grad_to_probs(&t.state, edge, &grad_in[off..off + dims.files]);
            let dot: f64 = soft.iter().zip(&g_probs).map(|(s, g)| s * g).sum();
            let g_logits: Vec<f64> = soft
                .iter()
                .zip(&g_probs)
                .zip(logits)
                .map(|((s, gp), l)| s / temp * (gp - dot) + 2.0 * penalty * l / (n_actions as f64 * n))
                .collect();
            agent.actor.backward(&actor_trace, &g_logits, &mut grad);
        }
        (loss, grad)
    }

    pub fn soft_update_targets(&mut self) {
        let tau = self.params.tau;
        for a in &mut self.agents {
            a.target_actor.track(&a.actor, tau);
            a.target_critic.track(&a.critic, tau);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::OptimizerKind;
    use crate::rng::{stream, Stream};
    use crate::sim::FileId;

    fn dims() -> Dims {
        Dims {
            edges: 2,
            files: 4,
            slots: 2,
        }
    }

    fn params() -> LearnerParams {
        LearnerParams {
            hidden: 8,
            batch_size: 4,
            replay_capacity: 64,
            ..LearnerParams::default()
        }
    }

    fn random_state<R: Rng>(rng: &mut R) -> GameState {
        let pick = |rng: &mut R| FileId(rng.random_range(1..=4));
        let requested = (0..2).map(|_| (0..3).map(|_| pick(rng)).collect()).collect();
        let cached = (0..2)
            .map(|_| {
                let first = rng.random_range(1..=4u32);
                let second = first % 4 + 1;
                vec![Some(FileId(first)), Some(FileId(second))]
            })
            .collect();
        GameState { requested, cached }
    }

    fn random_transition<R: Rng>(rng: &mut R) -> Transition {
        Transition {
            state: random_state(rng),
            actions: (0..2).map(|_| CacheAction(rng.random_range(0..9))).collect(),
            rewards: (0..2).map(|_| rng.random_range(0.0..2.0)).collect(),
            next: random_state(rng),
        }
    }

    fn zero_critic(m: &mut Maddpg, e: usize) {
        m.agents[e].critic.params_mut().fill(0.0);
    }

    #[test]
    fn critic_loss_with_zero_discount_and_zero_critic_is_mean_square_reward() {
        let mut rng = stream(1, Stream::Policy);
        let mut m = Maddpg::new(dims(), LearnerParams { gamma: 0.0, ..params() }, &mut rng);
        zero_critic(&mut m, 0);
        let batch: Vec<Transition> = (0..5).map(|_| random_transition(&mut rng)).collect();
        let refs: Vec<&Transition> = batch.iter().collect();
        let y: Vec<f64> = m.critic_targets(&refs).iter().map(|t| t[0]).collect();
        let expected = batch.iter().map(|t| t.rewards[0].powi(2)).sum::<f64>() / 5.0;
        let (loss, _) = m.critic_loss(0, &refs, &y);
        assert!((loss - expected).abs() < 1e-12);
    }

    #[test]
    fn critic_gradient_matches_finite_differences() {
        let mut rng = stream(2, Stream::Policy);
        let m = Maddpg::new(dims(), params(), &mut rng);
        let batch: Vec<Transition> = (0..4).map(|_| random_transition(&mut rng)).collect();
        let refs: Vec<&Transition> = batch.iter().collect();
        let y = vec![0.3, -0.1, 1.2, 0.5];
        let (_, grad) = m.critic_loss(1, &refs, &y);
        let h = 1e-6;
        for i in (0..grad.len()).step_by(5) {
            let mut hi = m.clone();
            hi.agents[1].critic.params_mut()[i] += h;
            let mut lo = m.clone();
            lo.agents[1].critic.params_mut()[i] -= h;
            let numeric = (hi.critic_loss(1, &refs, &y).0 - lo.critic_loss(1, &refs, &y).0) / (2.0 * h);
            assert!((numeric - grad[i]).abs() < 1e-6, "param {i}: {numeric} vs {}", grad[i]);
        }
    }

    #[test]
    fn soft_actor_gradient_matches_finite_differences() {
        let mut rng = stream(3, Stream::Policy);
        let p = LearnerParams {
            relaxation: Relaxation::Soft,
            gumbel_temperature: 0.7,
            logit_penalty: 0.01,
            ..params()
        };
        let m = Maddpg::new(dims(), p, &mut rng);
        let batch: Vec<Transition> = (0..3).map(|_| random_transition(&mut rng)).collect();
        let refs: Vec<&Transition> = batch.iter().collect();
        let g = Gumbel::new(0.0, 1.0).unwrap();
        let noise: Vec<Vec<f64>> = (0..3).map(|_| (0..9).map(|_| g.sample(&mut rng)).collect()).collect();
        let (_, grad) = m.actor_objective(0, &refs, &noise);
        let h = 1e-6;
        for i in (0..grad.len()).step_by(3) {
            let mut hi = m.clone();
            hi.agents[0].actor.params_mut()[i] += h;
            let mut lo = m.clone();
            lo.agents[0].actor.params_mut()[i] -= h;
            let numeric =
                (hi.actor_objective(0, &refs, &noise).0 - lo.actor_objective(0, &refs, &noise).0) / (2.0 * h);
            assert!(
                (numeric - grad[i]).abs() < 1e-6 * numeric.abs().max(1.0),
                "param {i}: {numeric} vs {}",
                grad[i]
            );
        }
    }

    #[test]
    fn zero_learning_rate_leaves_networks_unchanged() {
        let mut rng = stream(4, Stream::Policy);
        let p = LearnerParams {
            learning_rate: 0.0,
            tau: 1.0,
            ..params()
        };
        let mut m = Maddpg::new(dims(), p, &mut rng);
        for _ in 0..8 {
            m.store(random_transition(&mut rng));
        }
        let before = m.agents.clone();
        assert!(m.train_step(&mut rng).is_some());
        for (a, b) in m.agents.iter().zip(&before) {
            assert_eq!(a.actor, b.actor);
            assert_eq!(a.critic, b.critic);
            assert_eq!(a.target_actor, b.actor);
        }
    }

    #[test]
    fn no_update_before_a_full_batch() {
        let mut rng = stream(5, Stream::Policy);
        let mut m = Maddpg::new(dims(), params(), &mut rng);
        m.store(random_transition(&mut rng));
        let before = m.clone();
        assert!(m.train_step(&mut rng).is_none());
        assert_eq!(m, before);
    }

    #[test]
    fn soft_update_mixes_by_tau() {
        let mut rng = stream(6, Stream::Policy);
        let mut m = Maddpg::new(dims(), LearnerParams { tau: 0.5, ..params() }, &mut rng);
        m.agents[0].actor.params_mut().fill(2.0);
        m.agents[0].target_actor.params_mut().fill(1.0);
        m.soft_update_targets();
        assert!(m.agents[0].target_actor.params().iter().all(|&p| p == 1.5));
        // target already equal to online: fixed point
        let critic = m.agents[1].critic.clone();
        m.agents[1].target_critic = critic.clone();
        m.soft_update_targets();
        assert_eq!(m.agents[1].target_critic, critic);
    }

    #[test]
    fn greedy_selection_follows_logits() {
        let mut rng = stream(7, Stream::Policy);
        let mut actor = Mlp::new(&[2, 3], &mut rng);
        // weights zero, bias picks action 2
        let p = actor.params_mut();
        p.fill(0.0);
        p[6 + 2] = 1.0;
        assert_eq!(select_action(&actor, &[0.5, 0.5], 0.0, &mut rng), CacheAction(2));
        let mut counts = [0usize; 3];
        for _ in 0..3000 {
            counts[select_action(&actor, &[0.5, 0.5], 1.0, &mut rng).index()] += 1;
        }
        assert!(counts.iter().all(|&c| c > 850), "{counts:?}");
    }

    #[test]
    fn learns_two_action_bandit() {
        // one edge, one slot, two files; only file 2 is ever requested and
        // caching it pays 1, so the actor should learn to swap it in.
        let d = Dims {
            edges: 1,
            files: 2,
            slots: 1,
        };
        let p = LearnerParams {
            hidden: 16,
            batch_size: 16,
            learning_rate: 0.01,
            optimizer: OptimizerKind::Adam,
            gamma: 0.0,
            tau: 0.05,
            ..LearnerParams::default()
        };
        let mut rng = stream(8, Stream::Policy);
        let mut m = Maddpg::new(d, p, &mut rng);
        let state = GameState {
            requested: vec![vec![FileId(2)]],
            cached: vec![vec![Some(FileId(1))]],
        };
        for _ in 0..400 {
            let a = CacheAction(rng.random_range(0..3));
            let after = state.slots_after(0, a, 2);
            let reward = if after[0] == Some(FileId(2)) { 1.0 } else { 0.0 };
            m.store(Transition {
                state: state.clone(),
                actions: vec![a],
                rewards: vec![reward],
                next: state.clone(),
            });
            m.train_step(&mut rng);
        }
        assert_eq!(m.act(&state, 0.0, &mut rng), vec![CacheAction(2)]);
    }
}
