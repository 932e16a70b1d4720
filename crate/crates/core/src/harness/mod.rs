//! The two-step training loop, its configuration, metrics and checkpoints.

pub mod checkpoint;
pub mod config;
pub mod metrics;
pub mod run;
pub mod suite;

use thiserror::Error;

use crate::oracle::OracleError;
use crate::sim::{SimError, Violation};

pub use checkpoint::Checkpoint;
pub use config::{parse_config, Algorithm, ConfigError, ExperimentConfig, RawConfig};
pub use metrics::{read_metrics, MetricsRow, MetricsWriter};
pub use run::{run_experiment, seed_csv_path, EvalStep, Experiment, Policy, StepOutcome};
pub use suite::{report, run_suite, suite_configs, summarize, SummaryRow};

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error(transparent)]
    Oracle(#[from] OracleError),
    #[error("constraint violated in iteration {iteration}: {violations:?}")]
    Constraint {
        iteration: usize,
        violations: Vec<Violation>,
    },
    #[error("suite entry {0} uses a different simulation config")]
    MismatchedSuite(String),
    #[error("checkpoint version {found}, expected {expected}")]
    CheckpointVersion { found: u32, expected: u32 },
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
