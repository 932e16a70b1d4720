use serde::{Deserialize, Serialize};

use super::{Point, SimError};

/// Physical parameters of one simulated network.
///
/// Defaults are the three-cell setup: 100 m cells, 10 MB caches holding 1 MB
/// files, 50 files with Zipf skew 1.2, 200 users/km², 39.953 W peak power,
/// 4.5 MHz links and a cloud 3 km away with path-loss exponent 4.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub num_edges: usize,
    pub num_files: usize,
    /// Files per edge cache (F1).
    pub cache_slots: usize,
    pub file_size_bits: f64,
    pub cache_capacity_bits: f64,
    pub cell_radius_m: f64,
    pub user_density_per_km2: f64,
    /// When set, exactly this many users are placed instead of a Poisson count.
    pub fixed_users: Option<usize>,
    /// Explicit user placement; overrides both the count and the random layout.
    #[serde(default)]
    pub user_positions: Option<Vec<Point>>,
    pub zipf_skew: f64,
    pub path_loss_exponent: f64,
    pub bandwidth_edge_hz: f64,
    pub bandwidth_cloud_hz: f64,
    pub cloud_distance_m: f64,
    pub peak_power_w: f64,
    pub noise_power_w: f64,
    pub rng_seed: u64,
}

const MB_BITS: f64 = 8.0e6;

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            num_edges: 3,
            num_files: 50,
            cache_slots: 10,
            file_size_bits: MB_BITS,
            cache_capacity_bits: 10.0 * MB_BITS,
            cell_radius_m: 100.0,
            user_density_per_km2: 200.0,
            fixed_users: None,
            user_positions: None,
            zipf_skew: 1.2,
            path_loss_exponent: 4.0,
            bandwidth_edge_hz: 4.5e6,
            bandwidth_cloud_hz: 4.5e6,
            cloud_distance_m: 3000.0,
            peak_power_w: 39.953,
            noise_power_w: 1e-13,
            rng_seed: 0,
        }
    }
}

fn positive(field: &'static str, value: f64) -> Result<(), SimError> {
    if value.is_finite() && value > 0.0 {
        Ok(())
    } else {
        Err(SimError::InvalidConfig {
            field,
            reason: format!("must be finite and > 0, got {value}"),
        })
    }
}

impl SimConfig {
    pub fn validate(&self) -> Result<(), SimError> {
        if self.num_edges == 0 {
            return Err(SimError::InvalidConfig {
                field: "num_edges",
                reason: "at least one edge server is required".into(),
            });
        }
        if self.num_files == 0 {
            return Err(SimError::InvalidConfig {
                field: "num_files",
                reason: "the library must hold at least one file".into(),
            });
        }
        if self.cache_slots == 0 || self.cache_slots >= self.num_files {
            return Err(SimError::InvalidConfig {
                field: "cache_slots",
                reason: format!(
                    "need 1 <= cache_slots < num_files, got {} with {} files",
                    self.cache_slots, self.num_files
                ),
            });
        }
        if self.fixed_users == Some(0) {
            return Err(SimError::InvalidConfig {
                field: "fixed_users",
                reason: "a fixed user count must be positive".into(),
            });
        }
        positive("file_size_bits", self.file_size_bits)?;
        positive("cache_capacity_bits", self.cache_capacity_bits)?;
        positive("cell_radius_m", self.cell_radius_m)?;
        positive("user_density_per_km2", self.user_density_per_km2)?;
        positive("path_loss_exponent", self.path_loss_exponent)?;
        positive("bandwidth_edge_hz", self.bandwidth_edge_hz)?;
        positive("bandwidth_cloud_hz", self.bandwidth_cloud_hz)?;
        positive("cloud_distance_m", self.cloud_distance_m)?;
        positive("peak_power_w", self.peak_power_w)?;
        positive("noise_power_w", self.noise_power_w)?;
        if !(self.zipf_skew.is_finite() && self.zipf_skew >= 0.0) {
            return Err(SimError::InvalidConfig {
                field: "zipf_skew",
                reason: format!("must be finite and >= 0, got {}", self.zipf_skew),
            });
        }
        if self.cache_slots as f64 * self.file_size_bits > self.cache_capacity_bits {
            return Err(SimError::InvalidConfig {
                field: "cache_capacity_bits",
                reason: format!(
                    "{} slots of {} bits exceed capacity {}",
                    self.cache_slots, self.file_size_bits, self.cache_capacity_bits
                ),
            });
        }
        Ok(())
    }

    /// Size of the per-edge action space, including the no-op.
    pub fn action_count(&self) -> usize {
        self.cache_slots * self.num_files + 1
    }
}
