use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::checkpoint::Checkpoint;
use super::config::{Algorithm, ExperimentConfig};
use super::metrics::{MetricsRow, MetricsWriter};
use super::HarnessError;
use crate::baselines::{baseline_step, BaselinePolicyKind};
use crate::mabla::{build_association, Arm, Mabla};
use crate::marl::{
    apply_cache_action, compute_reward, decode_action, training_reward, CacheAction, Dims,
    GameState, Maddpg, Sarl, Transition,
};
use crate::oracle::{oracle_joint, OracleBudget};
use crate::rng::{stream, SimRng, Stream};
use crate::sim::{
    check_constraints, evaluate_delay, sample_channels, sample_requests, sample_topology,
    AssociationState, CacheState, ChannelSnapshot, DelayReport, NetworkTopology, RequestState,
};

/// Caching policy driven by one experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Policy {
    Marl(Box<Maddpg>),
    Sarl(Box<Sarl>),
    Baseline(BaselinePolicyKind),
    /// Per-snapshot exhaustive joint optimum.
    Oracle,
}

/// Result of one environment step.
#[derive(Debug, Clone, PartialEq)]
pub struct StepOutcome {
    pub report: DelayReport,
    pub association: AssociationState,
    /// Mean over edges of `1 / per-edge delay`.
    pub mean_reward: f64,
}

/// Full state of one seeded run; serialising it is enough to resume.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Experiment {
    config: ExperimentConfig,
    seed: u64,
    topology: NetworkTopology,
    cache: CacheState,
    policy: Policy,
    mabla: Mabla,
    req: RequestState,
    ch: ChannelSnapshot,
    traffic_rng: SimRng,
    policy_rng: SimRng,
    transmission_rng: SimRng,
    iteration: usize,
    caching_steps_done: u64,
}

impl Experiment {
    pub fn new(config: ExperimentConfig, seed: u64) -> Result<Self, HarnessError> {
        config.validate()?;
        let sim = &config.sim;
        let topology = sample_topology(sim, &mut stream(seed, Stream::Topology))?;
        let cache = CacheState::random_full(
            sim.num_edges,
            sim.cache_slots,
            sim.num_files,
            &mut stream(seed, Stream::InitialCache),
        );
        let mut policy_rng = stream(seed, Stream::Policy);
        let dims = Dims {
            edges: sim.num_edges,
            files: sim.num_files,
            slots: sim.cache_slots,
        };
        let policy = match config.algorithm {
            Algorithm::MarlMabla | Algorithm::MarlSt | Algorithm::MarlJt => Policy::Marl(Box::new(
                Maddpg::new(dims, config.learner.clone(), &mut policy_rng),
            )),
            Algorithm::SarlJt => Policy::Sarl(Box::new(Sarl::new(
                dims,
                config.learner.clone(),
                &mut policy_rng,
            ))),
            Algorithm::LruJt | Algorithm::LfuJt | Algorithm::FifoJt => {
                Policy::Baseline(config.algorithm.baseline().expect("baseline algorithm"))
            }
            Algorithm::Oracle => Policy::Oracle,
        };
        let users = topology.num_users();
        let mabla = match config.algorithm {
            Algorithm::MarlMabla => Mabla::new(users, config.feedback_scope),
            Algorithm::MarlSt => Mabla::pinned(users, Arm::Single),
            _ => Mabla::pinned(users, Arm::Joint),
        };
        let mut traffic_rng = stream(seed, Stream::Traffic);
        let req = sample_requests(sim, &topology, &mut traffic_rng);
        let ch = sample_channels(sim, &topology, &mut traffic_rng);
        Ok(Self {
            config,
            seed,
            topology,
            cache,
            policy,
            mabla,
            req,
            ch,
            traffic_rng,
            policy_rng,
            transmission_rng: stream(seed, Stream::Transmission),
            iteration: 0,
            caching_steps_done: 0,
        })
    }

    pub fn config(&self) -> &ExperimentConfig {
        &self.config
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn topology(&self) -> &NetworkTopology {
        &self.topology
    }

    pub fn cache(&self) -> &CacheState {
        &self.cache
    }

    pub fn cache_mut(&mut self) -> &mut CacheState {
        &mut self.cache
    }

    pub fn policy(&self) -> &Policy {
        &self.policy
    }

    pub fn mabla(&self) -> &Mabla {
        &self.mabla
    }

    pub fn requests(&self) -> &RequestState {
        &self.req
    }

    pub fn channels(&self) -> &ChannelSnapshot {
        &self.ch
    }

    /// Completed iterations.
    pub fn iteration(&self) -> usize {
        self.iteration
    }

    pub fn is_finished(&self) -> bool {
        self.iteration >= self.config.iterations
    }

    fn draw_snapshot(&mut self) {
        self.req = sample_requests(&self.config.sim, &self.topology, &mut self.traffic_rng);
        self.ch = sample_channels(&self.config.sim, &self.topology, &mut self.traffic_rng);
    }

    fn epsilon(&self) -> f64 {
        let horizon = (self.config.iterations * self.config.caching_steps) as u64;
        self.config.learner.epsilon_at(self.caching_steps_done, horizon)
    }

    fn oracle_snapshot(&mut self) -> Result<AssociationState, HarnessError> {
        let best = oracle_joint(
            &self.config.sim,
            &self.topology,
            &self.req,
            &self.ch,
            OracleBudget {
                max_configs: self.config.oracle_budget,
            },
        )?;
        self.cache = best.cache;
        Ok(best.association)
    }

    fn evaluate(&self, association: AssociationState) -> Result<StepOutcome, HarnessError> {
        let violations = check_constraints(
            &self.cache,
            &association,
            &self.ch,
            &self.topology,
            &self.config.sim,
        );
        if !violations.is_empty() {
            return Err(HarnessError::Constraint {
                iteration: self.iteration + 1,
                violations,
            });
        }
        let report = evaluate_delay(&self.cache, &association, &self.req, &self.ch, &self.config.sim)?;
        let edges = self.topology.num_edges();
        let mean_reward = (0..edges).map(|e| compute_reward(e, &report)).sum::<f64>() / edges as f64;
        Ok(StepOutcome {
            report,
            association,
            mean_reward,
        })
    }

    fn apply_actions(&mut self, actions: &[CacheAction]) {
        let sim = &self.config.sim;
        for (e, &a) in actions.iter().enumerate() {
            let decoded = decode_action(a, sim.cache_slots, sim.num_files).expect("actor output in range");
            apply_cache_action(&mut self.cache, e, decoded);
        }
    }

    /// Caching step: the policy updates the caches from the current
    /// snapshot, the next snapshot is served with the current transmission
    /// modes, and learners store the transition and train.
    pub fn caching_step(&mut self) -> Result<StepOutcome, HarnessError> {
        let state = GameState::capture(&self.topology, &self.req, &self.cache);
        let eps = self.epsilon();
        let actions = match &self.policy {
            Policy::Marl(m) => Some(m.act(&state, eps, &mut self.policy_rng)),
            Policy::Sarl(s) => Some(s.act(&state, eps, &mut self.policy_rng)),
            Policy::Baseline(kind) => {
                baseline_step(*kind, &mut self.cache, &self.topology, &self.req);
                None
            }
            Policy::Oracle => None,
        };
        if let Some(a) = &actions {
            self.apply_actions(a);
        }
        self.draw_snapshot();
        let association = if matches!(self.policy, Policy::Oracle) {
            self.oracle_snapshot()?
        } else {
            self.mabla.association(&self.topology, &self.cache, &self.req, &self.ch)
        };
        let outcome = self.evaluate(association)?;
        if let Some(actions) = actions {
            let kind = self.config.learner.reward;
            let rewards = (0..self.topology.num_edges())
                .map(|e| training_reward(kind, e, &outcome.report, &self.topology))
                .collect();
            let transition = Transition {
                state,
                actions,
                rewards,
                next: GameState::capture(&self.topology, &self.req, &self.cache),
            };
            match &mut self.policy {
                Policy::Marl(m) => {
                    m.store(transition);
                    m.train_step(&mut self.policy_rng);
                }
                Policy::Sarl(s) => {
                    s.store(transition);
                    s.train_step(&mut self.policy_rng);
                }
                _ => {}
            }
        }
        self.caching_steps_done += 1;
        Ok(outcome)
    }

    /// Transmission step with the caches frozen: a fresh snapshot and one
    /// automaton round.
    pub fn transmission_step(&mut self) -> Result<StepOutcome, HarnessError> {
        self.draw_snapshot();
        let association = if matches!(self.policy, Policy::Oracle) {
            self.oracle_snapshot()?
        } else {
            self.mabla
                .round(
                    &self.topology,
                    &self.cache,
                    &self.req,
                    &self.ch,
                    &self.config.sim,
                    &mut self.transmission_rng,
                )?
                .association
        };
        self.evaluate(association)
    }

    /// One outer iteration; the row reports the final step and the mean
    /// reward over the caching steps.
    pub fn run_iteration(&mut self) -> Result<MetricsRow, HarnessError> {
        if self.config.reinit_automata {
            self.mabla.reset_automata();
        }
        let mut reward_sum = 0.0;
        let mut last = None;
        for _ in 0..self.config.caching_steps {
            let o = self.caching_step()?;
            reward_sum += o.mean_reward;
            last = Some(o);
        }
        for _ in 0..self.config.transmission_steps {
            last = Some(self.transmission_step()?);
        }
        self.iteration += 1;
        let last = last.expect("at least one step per iteration");
        Ok(MetricsRow::from_report(
            self.iteration,
            self.seed,
            self.config.algorithm.name(),
            &last.report,
            &last.association,
            reward_sum / self.config.caching_steps as f64,
        ))
    }

    /// Runs the remaining iterations, writing each row as it is produced and
    /// saving a checkpoint every `checkpoint.1` iterations if requested.
    pub fn run(
        &mut self,
        mut writer: Option<&mut MetricsWriter>,
        checkpoint: Option<(&Path, usize)>,
    ) -> Result<Vec<MetricsRow>, HarnessError> {
        let mut rows = Vec::new();
        while !self.is_finished() {
            let row = self.run_iteration()?;
            if let Some(w) = writer.as_deref_mut() {
                w.write(&row)?;
            }
            rows.push(row);
            if let Some((path, every)) = checkpoint {
                if every > 0 && self.iteration % every == 0 {
                    Checkpoint::new(self.clone()).save(path)?;
                }
            }
        }
        Ok(rows)
    }
}

/// One step of a frozen-policy evaluation.
#[derive(Debug, Clone, PartialEq)]
pub struct EvalStep {
    pub req: RequestState,
    pub ch: ChannelSnapshot,
    pub cache: CacheState,
    pub report: DelayReport,
}

impl Experiment {
    /// Serves `steps` snapshots from the evaluation stream without learning:
    /// the caching policy acts greedily before each snapshot and the
    /// transmission modes are the greedy arms. The experiment is left as is.
    pub fn evaluate_frozen(&self, steps: usize) -> Result<Vec<EvalStep>, HarnessError> {
        let mut exp = self.clone();
        let mut eval_rng = stream(self.seed, Stream::Evaluation);
        let arms = exp.mabla.greedy_arms();
        let mut out = Vec::with_capacity(steps);
        for _ in 0..steps {
            let state = GameState::capture(&exp.topology, &exp.req, &exp.cache);
            match &exp.policy {
                Policy::Marl(m) => {
                    let a = m.act(&state, 0.0, &mut exp.policy_rng);
                    exp.apply_actions(&a);
                }
                Policy::Sarl(s) => {
                    let a = s.act(&state, 0.0, &mut exp.policy_rng);
                    exp.apply_actions(&a);
                }
                Policy::Baseline(kind) => baseline_step(*kind, &mut exp.cache, &exp.topology, &exp.req),
                Policy::Oracle => {}
            }
            exp.req = sample_requests(&exp.config.sim, &exp.topology, &mut eval_rng);
            exp.ch = sample_channels(&exp.config.sim, &exp.topology, &mut eval_rng);
            let association = if matches!(exp.policy, Policy::Oracle) {
                exp.oracle_snapshot()?
            } else {
                build_association(&exp.topology, &exp.cache, &exp.req, &exp.ch, &arms)
            };
            let outcome = exp.evaluate(association)?;
            out.push(EvalStep {
                req: exp.req.clone(),
                ch: exp.ch.clone(),
                cache: exp.cache.clone(),
                report: outcome.report,
            });
        }
        Ok(out)
    }
}

/// `<out>/<algorithm>_seed<seed>.csv`.
pub fn seed_csv_path(out: &Path, algorithm: Algorithm, seed: u64) -> PathBuf {
    out.join(format!("{}_seed{}.csv", algorithm.name(), seed))
}

/// Runs one seeded experiment to completion and writes its CSV under
/// `cfg.output`.
pub fn run_experiment(cfg: &ExperimentConfig, seed: u64) -> Result<Vec<MetricsRow>, HarnessError> {
    std::fs::create_dir_all(&cfg.output)?;
    let mut writer = MetricsWriter::create(&seed_csv_path(&cfg.output, cfg.algorithm, seed))?;
    Experiment::new(cfg.clone(), seed)?.run(Some(&mut writer), None)
}
