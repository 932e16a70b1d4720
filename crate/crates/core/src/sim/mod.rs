//! Physical and network model: who is covered by whom, what they request, what
//! the channels look like, and how long delivery takes.

mod channel;
mod config;
mod constraints;
mod delay;
mod error;
mod state;
mod topology;
mod traffic;

pub use channel::{
    path_loss_amplitude, rayleigh_magnitude, sample_channels, ChannelSnapshot, PowerAllocation,
};
pub use config::SimConfig;
pub use constraints::{check_constraints, Violation};
pub use delay::{cloud_rate, evaluate_delay, jt_rate, st_rate, DelayReport};
pub use error::SimError;
pub use state::{AssociationState, CacheState, FileId, Mode, RequestState, SlotMeta};
pub use topology::{
    deployment_area_km2, edge_layout, sample_topology, sample_user_count, NetworkTopology, Point,
};
pub use traffic::{sample_requests, ZipfPopularity};
