use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::baselines::BaselinePolicyKind;
use crate::mabla::FeedbackScope;
use crate::marl::{LearnerParams, Relaxation, RewardKind};
use crate::nn::OptimizerKind;
use crate::sim::{Point, SimConfig, SimError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Algorithm {
    #[serde(rename = "MARL-MABLA")]
    MarlMabla,
    #[serde(rename = "MARL-ST")]
    MarlSt,
    #[serde(rename = "MARL-JT")]
    MarlJt,
    #[serde(rename = "SARL-JT")]
    SarlJt,
    #[serde(rename = "LRU-JT")]
    LruJt,
    #[serde(rename = "LFU-JT")]
    LfuJt,
    #[serde(rename = "FIFO-JT")]
    FifoJt,
    #[serde(rename = "ORACLE")]
    Oracle,
}

impl Algorithm {
    pub const ALL: [Algorithm; 8] = [
        Self::MarlMabla,
        Self::MarlSt,
        Self::MarlJt,
        Self::SarlJt,
        Self::LruJt,
        Self::LfuJt,
        Self::FifoJt,
        Self::Oracle,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Self::MarlMabla => "MARL-MABLA",
            Self::MarlSt => "MARL-ST",
            Self::MarlJt => "MARL-JT",
            Self::SarlJt => "SARL-JT",
            Self::LruJt => "LRU-JT",
            Self::LfuJt => "LFU-JT",
            Self::FifoJt => "FIFO-JT",
            Self::Oracle => "ORACLE",
        }
    }

    pub fn baseline(self) -> Option<BaselinePolicyKind> {
        match self {
            Self::LruJt => Some(BaselinePolicyKind::Lru),
            Self::LfuJt => Some(BaselinePolicyKind::Lfu),
            Self::FifoJt => Some(BaselinePolicyKind::Fifo),
            _ => None,
        }
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("unknown algorithm {0:?}")]
pub struct UnknownAlgorithm(pub String);

impl FromStr for Algorithm {
    type Err = UnknownAlgorithm;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::ALL
            .into_iter()
            .find(|a| a.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| UnknownAlgorithm(s.to_string()))
    }
}

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("reading {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error(transparent)]
    Parse(#[from] toml::de::Error),
    #[error("invalid `{field}`: {reason}")]
    Invalid { field: &'static str, reason: String },
    #[error(transparent)]
    Sim(#[from] SimError),
}

/// Everything one run (or a suite of runs) needs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub sim: SimConfig,
    pub algorithm: Algorithm,
    /// Algorithms compared by a suite.
    pub algorithms: Vec<Algorithm>,
    /// Outer iterations `N_T`.
    pub iterations: usize,
    /// Caching steps per iteration `N_t1`.
    pub caching_steps: usize,
    /// Transmission steps per iteration `N_t2`.
    pub transmission_steps: usize,
    pub learner: LearnerParams,
    pub feedback_scope: FeedbackScope,
    /// Reset every automaton to the uniform prior at the start of each iteration.
    pub reinit_automata: bool,
    pub seeds: Vec<u64>,
    pub output: PathBuf,
    /// Iterations at the end of a run summarised by reports.
    pub final_window: usize,
    pub oracle_budget: u128,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            sim: SimConfig::default(),
            algorithm: Algorithm::MarlMabla,
            algorithms: Algorithm::ALL[..7].to_vec(),
            iterations: 4000,
            caching_steps: 75,
            transmission_steps: 50,
            learner: LearnerParams::default(),
            feedback_scope: FeedbackScope::System,
            reinit_automata: false,
            seeds: Vec::new(),
            output: PathBuf::from("results"),
            final_window: 100,
            oracle_budget: 1_000_000,
        }
    }
}

/// Flat on-disk form; every key is optional and overrides the default.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawConfig {
    pub num_edges: Option<usize>,
    pub num_files: Option<usize>,
    pub cache_slots: Option<usize>,
    pub file_size_bits: Option<f64>,
    pub cache_capacity_bits: Option<f64>,
    pub cell_radius_m: Option<f64>,
    pub user_density_per_km2: Option<f64>,
    pub fixed_users: Option<usize>,
    pub user_positions: Option<Vec<Point>>,
    pub zipf_skew: Option<f64>,
    pub path_loss_exponent: Option<f64>,
    pub bandwidth_edge_hz: Option<f64>,
    pub bandwidth_cloud_hz: Option<f64>,
    pub cloud_distance_m: Option<f64>,
    pub peak_power_w: Option<f64>,
    pub noise_power_w: Option<f64>,
    pub rng_seed: Option<u64>,

    pub algorithm: Option<Algorithm>,
    pub algorithms: Option<Vec<Algorithm>>,
    pub iterations: Option<usize>,
    pub caching_steps: Option<usize>,
    pub transmission_steps: Option<usize>,
    pub feedback_scope: Option<FeedbackScope>,
    pub reinit_automata: Option<bool>,
    pub seeds: Option<Vec<u64>>,
    pub output: Option<PathBuf>,
    pub final_window: Option<usize>,
    pub oracle_budget: Option<u64>,

    pub replay_capacity: Option<usize>,
    pub learning_rate: Option<f64>,
    pub optimizer: Option<OptimizerKind>,
    pub tau: Option<f64>,
    pub gamma: Option<f64>,
    pub eps_start: Option<f64>,
    pub eps_end: Option<f64>,
    pub eps_decay_fraction: Option<f64>,
    pub batch_size: Option<usize>,
    pub hidden: Option<usize>,
    pub hidden_layers: Option<usize>,
    pub gumbel_temperature: Option<f64>,
    pub logit_penalty: Option<f64>,
    pub max_grad_norm: Option<f64>,
    pub relaxation: Option<Relaxation>,
    pub reward: Option<RewardKind>,
}

macro_rules! apply {
    ($raw:ident, $dst:expr, $($field:ident),+ $(,)?) => {
        $(if let Some(v) = $raw.$field { $dst.$field = v; })+
    };
}

impl RawConfig {
    pub fn into_config(self) -> Result<ExperimentConfig, ConfigError> {
        let mut cfg = ExperimentConfig::default();
        let raw = self;
        apply!(
            raw,
            cfg.sim,
            num_edges,
            num_files,
            cache_slots,
            file_size_bits,
            cache_capacity_bits,
            cell_radius_m,
            user_density_per_km2,
            zipf_skew,
            path_loss_exponent,
            bandwidth_edge_hz,
            bandwidth_cloud_hz,
            cloud_distance_m,
            peak_power_w,
            noise_power_w,
            rng_seed,
        );
        if raw.fixed_users.is_some() {
            cfg.sim.fixed_users = raw.fixed_users;
        }
        if raw.user_positions.is_some() {
            cfg.sim.user_positions = raw.user_positions;
        }
        apply!(
            raw,
            cfg,
            algorithm,
            algorithms,
            iterations,
            caching_steps,
            transmission_steps,
            feedback_scope,
            reinit_automata,
            seeds,
            output,
            final_window,
        );
        if let Some(b) = raw.oracle_budget {
            cfg.oracle_budget = b as u128;
        }
        apply!(
            raw,
            cfg.learner,
            replay_capacity,
            learning_rate,
            optimizer,
            tau,
            gamma,
            eps_start,
            eps_end,
            eps_decay_fraction,
            batch_size,
            hidden,
            hidden_layers,
            gumbel_temperature,
            logit_penalty,
            max_grad_norm,
            relaxation,
            reward,
        );
        cfg.validate()?;
        Ok(cfg)
    }
}

fn invalid(field: &'static str, reason: impl Into<String>) -> ConfigError {
    ConfigError::Invalid {
        field,
        reason: reason.into(),
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        self.sim.validate()?;
        if self.iterations == 0 {
            return Err(invalid("iterations", "must be at least 1"));
        }
        if self.caching_steps == 0 {
            return Err(invalid("caching_steps", "must be at least 1"));
        }
        if self.transmission_steps == 0 {
            return Err(invalid("transmission_steps", "must be at least 1"));
        }
        if self.final_window == 0 {
            return Err(invalid("final_window", "must be at least 1"));
        }
        let l = &self.learner;
        if l.replay_capacity == 0 {
            return Err(invalid("replay_capacity", "must be positive"));
        }
        if l.batch_size == 0 {
            return Err(invalid("batch_size", "must be positive"));
        }
        if l.hidden == 0 {
            return Err(invalid("hidden", "must be positive"));
        }
        if !(l.learning_rate.is_finite() && l.learning_rate >= 0.0) {
            return Err(invalid("learning_rate", "must be finite and >= 0"));
        }
        if !(l.tau > 0.0 && l.tau <= 1.0) {
            return Err(invalid("tau", "must lie in (0, 1]"));
        }
        if !(0.0..=1.0).contains(&l.gamma) {
            return Err(invalid("gamma", "must lie in [0, 1]"));
        }
        for (field, eps) in [("eps_start", l.eps_start), ("eps_end", l.eps_end)] {
            if !(0.0..=1.0).contains(&eps) {
                return Err(invalid(field, "must lie in [0, 1]"));
            }
        }
        if !(l.eps_decay_fraction > 0.0 && l.eps_decay_fraction <= 1.0) {
            return Err(invalid("eps_decay_fraction", "must lie in (0, 1]"));
        }
        if !(l.gumbel_temperature > 0.0 && l.gumbel_temperature.is_finite()) {
            return Err(invalid("gumbel_temperature", "must be finite and > 0"));
        }
        Ok(())
    }

    /// Seeds to run; falls back to the simulator seed when none are listed.
    pub fn seed_list(&self) -> Vec<u64> {
        if self.seeds.is_empty() {
            vec![self.sim.rng_seed]
        } else {
            self.seeds.clone()
        }
    }

    pub fn from_toml_str(text: &str) -> Result<Self, ConfigError> {
        toml::from_str::<RawConfig>(text)?.into_config()
    }
}

pub fn parse_config(path: &Path) -> Result<ExperimentConfig, ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    ExperimentConfig::from_toml_str(&text)
}
