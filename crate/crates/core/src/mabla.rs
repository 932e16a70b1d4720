//! Per-user Bayesian learning automata choosing between single (arm 0) and
//! joint (arm 1) transmission.

use rand::Rng;
use rand_distr::{Beta, Distribution};
use serde::{Deserialize, Serialize};
use statrs::function::gamma::ln_gamma;

use crate::sim::{
    evaluate_delay, AssociationState, CacheState, ChannelSnapshot, NetworkTopology,
    RequestState, SimConfig, SimError,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Arm {
    Single,
    Joint,
}

impl Arm {
    pub fn index(self) -> usize {
        match self {
            Arm::Single => 0,
            Arm::Joint => 1,
        }
    }

    pub fn from_index(i: usize) -> Self {
        if i == 0 {
            Arm::Single
        } else {
            Arm::Joint
        }
    }

    pub fn other(self) -> Self {
        match self {
            Arm::Single => Arm::Joint,
            Arm::Joint => Arm::Single,
        }
    }
}

/// Beta parameters `(α⁰, β⁰, α¹, β¹)` of one user.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AutomatonState {
    pub alpha: [f64; 2],
    pub beta: [f64; 2],
}

impl Default for AutomatonState {
    fn default() -> Self {
        Self {
            alpha: [1.0; 2],
            beta: [1.0; 2],
        }
    }
}

impl AutomatonState {
    pub fn new(alpha0: f64, beta0: f64, alpha1: f64, beta1: f64) -> Self {
        Self {
            alpha: [alpha0, alpha1],
            beta: [beta0, beta1],
        }
    }

    pub fn posterior_mean(&self, arm: Arm) -> f64 {
        let i = arm.index();
        self.alpha[i] / (self.alpha[i] + self.beta[i])
    }

    /// Arm with the larger posterior mean; arm 0 on ties.
    pub fn preferred(&self) -> Arm {
        if self.posterior_mean(Arm::Joint) > self.posterior_mean(Arm::Single) {
            Arm::Joint
        } else {
            Arm::Single
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Feedback {
    Reward,
    Penalty,
    /// Neither arm could be observed; the automaton is left alone.
    NoUpdate,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ArmOutcome {
    pub chosen_arm: Arm,
    pub feedback: Feedback,
    pub chosen_delay: f64,
    pub counterfactual_delay: f64,
}

/// Which delay the two arms are compared on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FeedbackScope {
    /// The user's own delivery time.
    User,
    /// Total delay of the step, so the power a joint link takes from other
    /// users is charged to the user that asked for it.
    System,
}

/// Draws `X⁰ ~ Beta(α⁰, β⁰)`, `X¹ ~ Beta(α¹, β¹)`; arm 0 iff `X⁰ > X¹`.
pub fn bla_select<R: Rng + ?Sized>(state: &AutomatonState, rng: &mut R) -> Arm {
    let x0 = Beta::new(state.alpha[0], state.beta[0])
        .expect("positive beta parameters")
        .sample(rng);
    let x1 = Beta::new(state.alpha[1], state.beta[1])
        .expect("positive beta parameters")
        .sample(rng);
    if x0 > x1 {
        Arm::Single
    } else {
        Arm::Joint
    }
}

/// Reward adds one to `α` of the chosen arm, penalty one to its `β`.
pub fn bla_update(state: &AutomatonState, outcome: &ArmOutcome) -> AutomatonState {
    let mut next = *state;
    let i = outcome.chosen_arm.index();
    match outcome.feedback {
        Feedback::Reward => next.alpha[i] += 1.0,
        Feedback::Penalty => next.beta[i] += 1.0,
        Feedback::NoUpdate => {}
    }
    next
}

/// Covering servers of `user` that hold its requested file.
pub fn holders(topology: &NetworkTopology, cache: &CacheState, req: &RequestState, user: usize) -> Vec<usize> {
    let f = req.file(user);
    topology
        .servers_covering(user)
        .iter()
        .copied()
        .filter(|&e| cache.holds(e, f))
        .collect()
}

/// Links of one user: joint links every covering holder, single picks the
/// holder with the strongest channel (lowest index on ties), and a user no
/// holder covers goes to the cloud.
pub fn user_links(
    topology: &NetworkTopology,
    cache: &CacheState,
    req: &RequestState,
    ch: &ChannelSnapshot,
    user: usize,
    arm: Arm,
) -> Vec<usize> {
    let mut h = holders(topology, cache, req, user);
    if arm == Arm::Single && h.len() > 1 {
        let mut best = h[0];
        for &e in &h[1..] {
            if ch.edge_gain[e][user] > ch.edge_gain[best][user] {
                best = e;
            }
        }
        h = vec![best];
    }
    h
}

/// Association with the given per-user arms. Arms of users covered by fewer
/// than two servers are ignored.
pub fn build_association(
    topology: &NetworkTopology,
    cache: &CacheState,
    req: &RequestState,
    ch: &ChannelSnapshot,
    arms: &[Arm],
) -> AssociationState {
    let links = (0..topology.num_users())
        .map(|u| user_links(topology, cache, req, ch, u, arms[u]))
        .collect();
    AssociationState::from_links(topology.num_edges(), links)
}

/// Delay of `user` (or the whole step) with `arm`, and with the other arm
/// while every other user keeps its links.
#[allow(clippy::too_many_arguments)]
pub fn evaluate_feedback(
    user: usize,
    arm: Arm,
    assoc: &AssociationState,
    topology: &NetworkTopology,
    cache: &CacheState,
    req: &RequestState,
    ch: &ChannelSnapshot,
    cfg: &SimConfig,
    scope: FeedbackScope,
) -> Result<ArmOutcome, SimError> {
    if holders(topology, cache, req, user).is_empty() {
        return Ok(ArmOutcome {
            chosen_arm: arm,
            feedback: Feedback::NoUpdate,
            chosen_delay: f64::NAN,
            counterfactual_delay: f64::NAN,
        });
    }
    let measure = |a: &AssociationState| -> Result<f64, SimError> {
        let report = evaluate_delay(cache, a, req, ch, cfg)?;
        Ok(match scope {
            FeedbackScope::User => report.per_user_delay[user],
            FeedbackScope::System => report.total,
        })
    };
    let mut chosen = assoc.clone();
    chosen.set_links(user, user_links(topology, cache, req, ch, user, arm));
    let mut flipped = assoc.clone();
    flipped.set_links(user, user_links(topology, cache, req, ch, user, arm.other()));
    let chosen_delay = measure(&chosen)?;
    let counterfactual_delay = measure(&flipped)?;
    Ok(ArmOutcome {
        chosen_arm: arm,
        feedback: if chosen_delay <= counterfactual_delay {
            Feedback::Reward
        } else {
            Feedback::Penalty
        },
        chosen_delay,
        counterfactual_delay,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct RoundResult {
    pub association: AssociationState,
    pub arms: Vec<Arm>,
    /// One entry per user; `None` for users covered by fewer than two servers
    /// or when the arms are pinned.
    pub outcomes: Vec<Option<ArmOutcome>>,
}

/// Automata of every user plus the configuration of a learning round.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Mabla {
    automata: Vec<AutomatonState>,
    arms: Vec<Arm>,
    pinned: Option<Arm>,
    scope: FeedbackScope,
    rounds: u64,
    /// Per user: rounds with feedback and how many of those were rewarded,
    /// over all rounds and since the last window reset.
    observed: Vec<u64>,
    rewarded: Vec<u64>,
}

impl Mabla {
    /// Fresh automata; every user starts on joint transmission.
    pub fn new(num_users: usize, scope: FeedbackScope) -> Self {
        Self {
            automata: vec![AutomatonState::default(); num_users],
            arms: vec![Arm::Joint; num_users],
            pinned: None,
            scope,
            rounds: 0,
            observed: vec![0; num_users],
            rewarded: vec![0; num_users],
        }
    }

    /// Every user always uses `arm`; nothing is learned.
    pub fn pinned(num_users: usize, arm: Arm) -> Self {
        Self {
            pinned: Some(arm),
            arms: vec![arm; num_users],
            ..Self::new(num_users, FeedbackScope::System)
        }
    }

    pub fn automata(&self) -> &[AutomatonState] {
        &self.automata
    }

    pub fn automata_mut(&mut self) -> &mut [AutomatonState] {
        &mut self.automata
    }

    /// Most recently chosen arm of every user.
    pub fn arms(&self) -> &[Arm] {
        &self.arms
    }

    /// Pinned arm, or each automaton's higher-posterior-mean arm.
    pub fn greedy_arms(&self) -> Vec<Arm> {
        match self.pinned {
            Some(arm) => vec![arm; self.automata.len()],
            None => self.automata.iter().map(AutomatonState::preferred).collect(),
        }
    }

    pub fn rounds(&self) -> u64 {
        self.rounds
    }

    pub fn scope(&self) -> FeedbackScope {
        self.scope
    }

    /// Restores the uniform prior on every automaton.
    pub fn reset_automata(&mut self) {
        self.automata.fill(AutomatonState::default());
    }

    pub fn reset_frequency_window(&mut self) {
        self.observed.fill(0);
        self.rewarded.fill(0);
    }

    pub fn association(
        &self,
        topology: &NetworkTopology,
        cache: &CacheState,
        req: &RequestState,
        ch: &ChannelSnapshot,
    ) -> AssociationState {
        build_association(topology, cache, req, ch, &self.arms)
    }

    /// One learning round with caches fixed: arms drawn in ascending user
    /// order, association built, then every multi-covered user's feedback is
    /// evaluated against the others' fresh choices and its automaton updated.
    pub fn round<R: Rng + ?Sized>(
        &mut self,
        topology: &NetworkTopology,
        cache: &CacheState,
        req: &RequestState,
        ch: &ChannelSnapshot,
        cfg: &SimConfig,
        rng: &mut R,
    ) -> Result<RoundResult, SimError> {
        let num_users = topology.num_users();
        let multi: Vec<bool> = (0..num_users).map(|u| topology.is_multi_covered(u)).collect();
        for u in 0..num_users {
            self.arms[u] = match self.pinned {
                Some(arm) => arm,
                None if multi[u] => bla_select(&self.automata[u], rng),
                None => self.arms[u],
            };
        }
        let association = build_association(topology, cache, req, ch, &self.arms);
        let mut outcomes = vec![None; num_users];
        if self.pinned.is_none() {
            for u in (0..num_users).filter(|&u| multi[u]) {
                let outcome = evaluate_feedback(
                    u,
                    self.arms[u],
                    &association,
                    topology,
                    cache,
                    req,
                    ch,
                    cfg,
                    self.scope,
                )?;
                outcomes[u] = Some(outcome);
            }
            for (u, outcome) in outcomes.iter().enumerate() {
                if let Some(o) = outcome {
                    self.automata[u] = bla_update(&self.automata[u], o);
                    if o.feedback != Feedback::NoUpdate {
                        self.observed[u] += 1;
                        if o.feedback == Feedback::Reward {
                            self.rewarded[u] += 1;
                        }
                    }
                }
            }
        }
        self.rounds += 1;
        Ok(RoundResult {
            association,
            arms: self.arms.clone(),
            outcomes,
        })
    }

    pub fn diagnostics(&self, users: &[usize]) -> ConvergenceDiagnostics {
        let automata: Vec<AutomatonState> = users.iter().map(|&u| self.automata[u]).collect();
        let freq: Vec<Option<f64>> = users
            .iter()
            .map(|&u| (self.observed[u] > 0).then(|| self.rewarded[u] as f64 / self.observed[u] as f64))
            .collect();
        convergence_report(&automata, &freq)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceDiagnostics {
    /// `α/(α+β)` of arm 0 and arm 1 per user.
    pub posterior_means: Vec<[f64; 2]>,
    /// Per user: fraction of observed rounds in which the chosen arm was the
    /// better one ex post.
    pub optimal_frequency: Vec<Option<f64>>,
    /// Probability that each user's draw picks its preferred arm.
    pub selection_probability: Vec<f64>,
    /// Product of the per-user selection probabilities.
    pub joint_probability: f64,
}

pub fn convergence_report(automata: &[AutomatonState], optimal_frequency: &[Option<f64>]) -> ConvergenceDiagnostics {
    let selection_probability: Vec<f64> = automata
        .iter()
        .map(|a| {
            let p0 = prob_single_wins(a);
            match a.preferred() {
                Arm::Single => p0,
                Arm::Joint => 1.0 - p0,
            }
        })
        .collect();
    ConvergenceDiagnostics {
        posterior_means: automata
            .iter()
            .map(|a| [a.posterior_mean(Arm::Single), a.posterior_mean(Arm::Joint)])
            .collect(),
        optimal_frequency: optimal_frequency.to_vec(),
        joint_probability: selection_probability.iter().product(),
        selection_probability,
    }
}

fn ln_beta(a: f64, b: f64) -> f64 {
    ln_gamma(a) + ln_gamma(b) - ln_gamma(a + b)
}

/// `P(X_B > X_A)` for independent `X_A ~ Beta(a_a, b_a)`, `X_B ~ Beta(a_b, b_b)`
/// with integer `a_b`.
pub fn prob_beta_greater(a_a: f64, b_a: f64, a_b: f64, b_b: f64) -> f64 {
    let n = a_b.round() as u64;
    let mut total = 0.0;
    for i in 0..n {
        let i = i as f64;
        total += (ln_beta(a_a + i, b_a + b_b) - (b_b + i).ln() - ln_beta(1.0 + i, b_b) - ln_beta(a_a, b_a)).exp();
    }
    total.clamp(0.0, 1.0)
}

/// `P(X⁰ > X¹)`: the exact probability that a draw selects arm 0.
pub fn prob_single_wins(state: &AutomatonState) -> f64 {
    prob_beta_greater(state.alpha[1], state.beta[1], state.alpha[0], state.beta[0])
}

/// Two-armed environment paying a reward with probability `delta[i]` for arm `i`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BernoulliArms {
    pub delta: [f64; 2],
}

impl BernoulliArms {
    pub fn pull<R: Rng + ?Sized>(&self, arm: Arm, rng: &mut R) -> Feedback {
        if rng.random::<f64>() < self.delta[arm.index()] {
            Feedback::Reward
        } else {
            Feedback::Penalty
        }
    }

    /// Runs one automaton for `steps` pulls; returns its final state and the
    /// chosen arm at every step.
    pub fn run<R: Rng + ?Sized>(&self, steps: usize, rng: &mut R) -> (AutomatonState, Vec<Arm>) {
        let mut state = AutomatonState::default();
        let mut history = Vec::with_capacity(steps);
        for _ in 0..steps {
            let arm = bla_select(&state, rng);
            let feedback = self.pull(arm, rng);
            state = bla_update(
                &state,
                &ArmOutcome {
                    chosen_arm: arm,
                    feedback,
                    chosen_delay: f64::NAN,
                    counterfactual_delay: f64::NAN,
                },
            );
            history.push(arm);
        }
        (state, history)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{stream, Stream};
    use crate::sim::{FileId, Mode, Point};

    fn outcome(arm: Arm, feedback: Feedback) -> ArmOutcome {
        ArmOutcome {
            chosen_arm: arm,
            feedback,
            chosen_delay: 1.0,
            counterfactual_delay: 1.0,
        }
    }

    #[test]
    fn update_rules() {
        let s = AutomatonState::default();
        assert_eq!(
            bla_update(&s, &outcome(Arm::Single, Feedback::Reward)),
            AutomatonState::new(2.0, 1.0, 1.0, 1.0)
        );
        assert_eq!(
            bla_update(&s, &outcome(Arm::Joint, Feedback::Penalty)),
            AutomatonState::new(1.0, 1.0, 1.0, 2.0)
        );
        assert_eq!(bla_update(&s, &outcome(Arm::Joint, Feedback::NoUpdate)), s);
    }

    #[test]
    fn concentrated_posteriors_pick_arm_zero() {
        let mut rng = stream(1, Stream::Transmission);
        let s = AutomatonState::new(1e6, 1.0, 1.0, 1e6);
        let hits = (0..10_000).filter(|_| bla_select(&s, &mut rng) == Arm::Single).count();
        assert!(hits as f64 / 1e4 > 0.999);
    }

    #[test]
    fn symmetric_prior_is_fair() {
        let mut rng = stream(2, Stream::Transmission);
        let s = AutomatonState::default();
        let hits = (0..10_000).filter(|_| bla_select(&s, &mut rng) == Arm::Single).count();
        assert!((hits as f64 / 1e4 - 0.5).abs() < 0.02);
    }

    #[test]
    fn beta_sampler_mean() {
        let mut rng = stream(3, Stream::Transmission);
        let b = Beta::new(2.0, 1.0).unwrap();
        let n = 1_000_000;
        let mean = (0..n).map(|_| b.sample(&mut rng)).sum::<f64>() / n as f64;
        assert!((mean - 2.0 / 3.0).abs() < 0.002);
    }

    #[test]
    fn exact_win_probability_matches_known_cases() {
        assert!((prob_beta_greater(1.0, 1.0, 1.0, 1.0) - 0.5).abs() < 1e-12);
        // X_B ~ Beta(2,1) vs uniform: P = ∫ (2x)·x dx = 2/3
        assert!((prob_beta_greater(1.0, 1.0, 2.0, 1.0) - 2.0 / 3.0).abs() < 1e-12);
        let p = prob_single_wins(&AutomatonState::new(30.0, 5.0, 4.0, 20.0));
        assert!(p > 0.999);
    }

    #[test]
    fn single_user_joint_probability_is_its_own() {
        let a = AutomatonState::new(5.0, 2.0, 3.0, 3.0);
        let d = convergence_report(&[a], &[None]);
        assert_eq!(d.joint_probability, d.selection_probability[0]);
        assert!((d.posterior_means[0][0] - 5.0 / 7.0).abs() < 1e-15);
    }

    /// Two servers 60 m apart, users at given positions, each server caching
    /// file 1 so that every covered user can be served jointly.
    fn two_server(users: Vec<Point>) -> (NetworkTopology, CacheState, RequestState, SimConfig) {
        let topo = NetworkTopology::from_positions(
            vec![Point::new(-30.0, 0.0), Point::new(30.0, 0.0)],
            users,
            100.0,
        );
        let n = topo.num_users();
        let cache = CacheState::from_files(&[vec![FileId(1)], vec![FileId(1)]], 2);
        let req = RequestState::new(vec![FileId(1); n]);
        let cfg = SimConfig {
            num_edges: 2,
            num_files: 2,
            cache_slots: 1,
            ..SimConfig::default()
        };
        (topo, cache, req, cfg)
    }

    fn symmetric_channels(topo: &NetworkTopology) -> ChannelSnapshot {
        let n = topo.num_users();
        ChannelSnapshot::from_gains(topo, vec![vec![1e-4; n]; 2], vec![1e-7; n])
    }

    #[test]
    fn single_covered_users_are_left_alone() {
        let topo = NetworkTopology::from_positions(
            vec![Point::new(0.0, 0.0), Point::new(500.0, 0.0)],
            vec![Point::new(10.0, 0.0), Point::new(490.0, 0.0)],
            100.0,
        );
        let cache = CacheState::from_files(&[vec![FileId(1)], vec![FileId(1)]], 2);
        let req = RequestState::new(vec![FileId(1); 2]);
        let cfg = SimConfig {
            num_edges: 2,
            num_files: 2,
            cache_slots: 1,
            ..SimConfig::default()
        };
        let ch = ChannelSnapshot::from_gains(&topo, vec![vec![1e-4; 2]; 2], vec![1e-7; 2]);
        let mut m = Mabla::new(2, FeedbackScope::System);
        let mut rng = stream(4, Stream::Transmission);
        let r = m.round(&topo, &cache, &req, &ch, &cfg, &mut rng).unwrap();
        assert_eq!(r.association.servers_of(0), &[0]);
        assert_eq!(r.association.servers_of(1), &[1]);
        assert!(m.automata().iter().all(|a| *a == AutomatonState::default()));
    }

    #[test]
    fn joint_faster_rewards_joint_and_penalises_single() {
        let (topo, cache, req, cfg) = two_server(vec![Point::new(0.0, 0.0)]);
        let ch = symmetric_channels(&topo);
        let assoc = build_association(&topo, &cache, &req, &ch, &[Arm::Joint]);
        for scope in [FeedbackScope::User, FeedbackScope::System] {
            let jt = evaluate_feedback(0, Arm::Joint, &assoc, &topo, &cache, &req, &ch, &cfg, scope).unwrap();
            assert_eq!(jt.feedback, Feedback::Reward);
            let st = evaluate_feedback(0, Arm::Single, &assoc, &topo, &cache, &req, &ch, &cfg, scope).unwrap();
            assert_eq!(st.feedback, Feedback::Penalty);
        }
    }

    #[test]
    fn equal_delays_count_as_reward() {
        // only one server holds the file, so both arms link the same server
        let (topo, _, req, cfg) = two_server(vec![Point::new(0.0, 0.0)]);
        let cache = CacheState::from_files(&[vec![FileId(1)], vec![FileId(2)]], 2);
        let ch = symmetric_channels(&topo);
        let assoc = build_association(&topo, &cache, &req, &ch, &[Arm::Single]);
        let o = evaluate_feedback(0, Arm::Single, &assoc, &topo, &cache, &req, &ch, &cfg, FeedbackScope::User).unwrap();
        assert_eq!(o.chosen_delay, o.counterfactual_delay);
        assert_eq!(o.feedback, Feedback::Reward);
    }

    #[test]
    fn uncached_file_gives_no_update() {
        let (topo, _, _, cfg) = two_server(vec![Point::new(0.0, 0.0)]);
        let cache = CacheState::from_files(&[vec![FileId(1)], vec![FileId(1)]], 2);
        let req = RequestState::new(vec![FileId(2)]);
        let ch = symmetric_channels(&topo);
        let assoc = build_association(&topo, &cache, &req, &ch, &[Arm::Joint]);
        assert_eq!(assoc.mode(0), Mode::Cloud);
        let o = evaluate_feedback(0, Arm::Joint, &assoc, &topo, &cache, &req, &ch, &cfg, FeedbackScope::System).unwrap();
        assert_eq!(o.feedback, Feedback::NoUpdate);
    }

    #[test]
    fn automata_drift_to_joint_when_it_doubles_the_rate() {
        let (topo, cache, req, cfg) = two_server(vec![Point::new(0.0, 0.0)]);
        let ch = symmetric_channels(&topo);
        let mut m = Mabla::new(1, FeedbackScope::User);
        let mut rng = stream(5, Stream::Transmission);
        for _ in 0..500 {
            m.round(&topo, &cache, &req, &ch, &cfg, &mut rng).unwrap();
        }
        assert!(m.automata()[0].posterior_mean(Arm::Joint) >= 0.9);
    }

    #[test]
    fn pinned_arms_reproduce_fixed_modes() {
        let (topo, cache, req, cfg) = two_server(vec![Point::new(0.0, 5.0), Point::new(0.0, -5.0)]);
        let ch = symmetric_channels(&topo);
        let mut rng = stream(6, Stream::Transmission);
        let mut st = Mabla::pinned(2, Arm::Single);
        let r = st.round(&topo, &cache, &req, &ch, &cfg, &mut rng).unwrap();
        assert!(r.association.modes().iter().all(|&m| m == Mode::Single));
        let mut jt = Mabla::pinned(2, Arm::Joint);
        let r = jt.round(&topo, &cache, &req, &ch, &cfg, &mut rng).unwrap();
        assert!(r.association.modes().iter().all(|&m| m == Mode::Joint));
        assert!(r.association.respects(&topo));
    }

    #[test]
    fn bernoulli_bandit_converges_to_better_arm() {
        let env = BernoulliArms { delta: [0.9, 0.1] };
        let mut rng = stream(7, Stream::Transmission);
        let (state, history) = env.run(1000, &mut rng);
        let late = history[900..].iter().filter(|&&a| a == Arm::Single).count();
        assert!(late >= 95);
        assert!((state.posterior_mean(Arm::Single) - 0.9).abs() < 0.05);
    }
}
