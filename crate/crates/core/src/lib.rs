//! Joint edge caching and transmission for a cloud + multi-edge content network.
//!
//! The crate is split along the lines of the system being modelled:
//!
//! - [`sim`]: geometry, Zipf traffic, fading channels, SIC rates, delays and the
//!   feasibility constraints.
//! - [`baselines`]: LRU / LFU / FIFO demand-fill caches.
//! - [`nn`]: a small dense approximator with analytic gradients.
//! - [`marl`]: the per-edge actor/critic caching learners and the single-agent
//!   baseline.
//! - [`mabla`]: per-user Bayesian learning automata choosing single or joint
//!   transmission.
//! - [`oracle`]: exhaustive solvers for tiny instances.
//! - [`harness`]: the iterative two-step training loop, configs, CSV metrics and
//!   checkpoints.

pub mod baselines;
pub mod harness;
pub mod mabla;
pub mod marl;
pub mod nn;
pub mod oracle;
pub mod rng;
pub mod sim;
pub mod stats;

pub use sim::{
    AssociationState, CacheState, ChannelSnapshot, DelayReport, FileId, Mode, NetworkTopology,
    RequestState, SimConfig, SimError,
};
