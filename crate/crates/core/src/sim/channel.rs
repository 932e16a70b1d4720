use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::{AssociationState, NetworkTopology, SimConfig};

/// Transmit powers in watts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PowerAllocation {
    /// `edge[e][u]`.
    pub edge: Vec<Vec<f64>>,
    pub cloud: Vec<f64>,
}

impl PowerAllocation {
    /// Half of the peak budget is shared equally by the active edge links and
    /// half by the cloud-served users.
    pub fn equal_split(assoc: &AssociationState, cfg: &SimConfig) -> Self {
        let num_users = assoc.num_users();
        let half = cfg.peak_power_w / 2.0;
        let links = assoc.link_count();
        let cloud_users = (0..num_users)
            .filter(|&u| assoc.servers_of(u).is_empty())
            .count();
        let per_link = if links > 0 { half / links as f64 } else { 0.0 };
        let per_cloud = if cloud_users > 0 {
            half / cloud_users as f64
        } else {
            0.0
        };
        let mut edge = vec![vec![0.0; num_users]; assoc.num_edges()];
        let mut cloud = vec![0.0; num_users];
        for u in 0..num_users {
            let servers = assoc.servers_of(u);
            if servers.is_empty() {
                cloud[u] = per_cloud;
            }
            for &e in servers {
                edge[e][u] = per_link;
            }
        }
        Self { edge, cloud }
    }

    pub fn total(&self) -> f64 {
        self.edge.iter().flatten().sum::<f64>() + self.cloud.iter().sum::<f64>()
    }
}

/// Fading and path-loss gains for one step.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChannelSnapshot {
    /// `|h_{e,u}|`.
    pub edge_gain: Vec<Vec<f64>>,
    /// `|h_{c,u}|`.
    pub cloud_gain: Vec<f64>,
    /// U^e sorted by descending `|h_{e,u}|` (ties by user id).
    sic_order: Vec<Vec<usize>>,
    /// Explicit powers; `None` means equal split derived from the association.
    pub power: Option<PowerAllocation>,
}

impl ChannelSnapshot {
    pub fn from_gains(
        topology: &NetworkTopology,
        edge_gain: Vec<Vec<f64>>,
        cloud_gain: Vec<f64>,
    ) -> Self {
        let sic_order = (0..topology.num_edges())
            .map(|e| {
                let mut users = topology.users_covered_by(e).to_vec();
                users.sort_by(|&a, &b| edge_gain[e][b].total_cmp(&edge_gain[e][a]).then(a.cmp(&b)));
                users
            })
            .collect();
        Self {
            edge_gain,
            cloud_gain,
            sic_order,
            power: None,
        }
    }

    pub fn with_power(mut self, power: PowerAllocation) -> Self {
        self.power = Some(power);
        self
    }

    pub fn sic_order(&self, edge: usize) -> &[usize] {
        &self.sic_order[edge]
    }

    /// Users decoded after `user` at `edge`, i.e. the ones that still interfere.
    pub fn later_in_sic(&self, edge: usize, user: usize) -> &[usize] {
        let order = &self.sic_order[edge];
        match order.iter().position(|&u| u == user) {
            Some(p) => &order[p + 1..],
            None => &[],
        }
    }

    pub fn powers(&self, assoc: &AssociationState, cfg: &SimConfig) -> PowerAllocation {
        match &self.power {
            Some(p) => p.clone(),
            None => PowerAllocation::equal_split(assoc, cfg),
        }
    }
}

/// Path-loss amplitude factor `d^(-α/2)`; distances are floored at 1 m.
pub fn path_loss_amplitude(distance_m: f64, exponent: f64) -> f64 {
    distance_m.max(1.0).powf(-exponent / 2.0)
}

/// `|g|` for `g ~ CN(0, 1)`.
pub fn rayleigh_magnitude<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    let re: f64 = StandardNormal.sample(rng);
    let im: f64 = StandardNormal.sample(rng);
    (0.5 * (re * re + im * im)).sqrt()
}

/// Draws fresh fading for every server-user pair and every cloud link.
pub fn sample_channels<R: Rng + ?Sized>(
    cfg: &SimConfig,
    topology: &NetworkTopology,
    rng: &mut R,
) -> ChannelSnapshot {
    let edge_gain = (0..topology.num_edges())
        .map(|e| {
            (0..topology.num_users())
                .map(|u| {
                    rayleigh_magnitude(rng)
                        * path_loss_amplitude(topology.distance(e, u), cfg.path_loss_exponent)
                })
                .collect()
        })
        .collect();
    let cloud_pl = path_loss_amplitude(cfg.cloud_distance_m, cfg.path_loss_exponent);
    let cloud_gain = (0..topology.num_users())
        .map(|_| rayleigh_magnitude(rng) * cloud_pl)
        .collect();
    ChannelSnapshot::from_gains(topology, edge_gain, cloud_gain)
}
