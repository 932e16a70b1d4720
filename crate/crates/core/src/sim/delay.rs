use serde::{Deserialize, Serialize};

use super::{
    AssociationState, CacheState, ChannelSnapshot, PowerAllocation, RequestState, SimConfig,
    SimError,
};

/// Transmission delay of one step, broken down for rewards and metrics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DelayReport {
    /// Delivery time of every edge-served user (ST or JT).
    pub edge_delay: f64,
    /// Delivery time of every cloud-served user.
    pub cloud_delay: f64,
    pub total: f64,
    /// `Σ_u s_f / R_{e,u}` over users linked to `e`, with the per-server rate.
    pub per_edge_delay: Vec<f64>,
    pub per_user_delay: Vec<f64>,
    pub per_user_rate: Vec<f64>,
    /// Whether the edge indicator `𝕀(Σ_e x y z ≥ 1)` is set for the user.
    pub edge_served: Vec<bool>,
    pub hit_count: usize,
    pub miss_count: usize,
}

impl DelayReport {
    pub fn hit_ratio(&self) -> f64 {
        let n = self.hit_count + self.miss_count;
        if n == 0 {
            0.0
        } else {
            self.hit_count as f64 / n as f64
        }
    }
}

/// Everything a rate formula needs, with powers resolved once.
struct LinkBudget<'a> {
    cache: &'a CacheState,
    assoc: &'a AssociationState,
    req: &'a RequestState,
    ch: &'a ChannelSnapshot,
    power: PowerAllocation,
    cfg: &'a SimConfig,
}

impl<'a> LinkBudget<'a> {
    fn new(
        cache: &'a CacheState,
        assoc: &'a AssociationState,
        req: &'a RequestState,
        ch: &'a ChannelSnapshot,
        cfg: &'a SimConfig,
    ) -> Self {
        Self {
            power: ch.powers(assoc, cfg),
            cache,
            assoc,
            req,
            ch,
            cfg,
        }
    }

    fn received_edge(&self, e: usize, u: usize) -> f64 {
        let a = self.ch.edge_gain[e][u] * self.power.edge[e][u];
        a * a
    }

    fn received_cloud(&self, u: usize) -> f64 {
        let a = self.ch.cloud_gain[u] * self.power.cloud[u];
        a * a
    }

    /// Per-server Shannon term; the `x·y·z` mask zeroes it when `e` does not
    /// hold the file or is not linked to the user.
    fn server_term(&self, e: usize, u: usize) -> f64 {
        let f = self.req.file(u);
        if !(self.assoc.linked(e, u) && self.cache.holds(e, f)) {
            return 0.0;
        }
        let interference: f64 = self
            .ch
            .later_in_sic(e, u)
            .iter()
            .filter(|&&i| self.assoc.linked(e, i) && self.req.requests(i, f))
            .map(|&i| self.received_edge(e, i))
            .sum();
        let sinr = self.received_edge(e, u) / (interference + self.cfg.noise_power_w);
        self.cfg.bandwidth_edge_hz * (1.0 + sinr).log2()
    }

    fn edge_indicator(&self, u: usize) -> bool {
        let f = self.req.file(u);
        self.assoc
            .servers_of(u)
            .iter()
            .any(|&e| self.cache.holds(e, f))
    }

    fn cloud_term(&self, u: usize) -> f64 {
        if self.edge_indicator(u) {
            return 0.0;
        }
        let interference: f64 = (0..self.req.num_users())
            .filter(|&i| i != u && !self.edge_indicator(i))
            .map(|i| self.received_cloud(i))
            .sum();
        let sinr = self.received_cloud(u) / (interference + self.cfg.noise_power_w);
        self.cfg.bandwidth_cloud_hz * (1.0 + sinr).log2()
    }
}

/// Single-transmission rate from `edge` to `user` (bits/s).
pub fn st_rate(
    edge: usize,
    user: usize,
    cache: &CacheState,
    assoc: &AssociationState,
    req: &RequestState,
    ch: &ChannelSnapshot,
    cfg: &SimConfig,
) -> f64 {
    LinkBudget::new(cache, assoc, req, ch, cfg).server_term(edge, user)
}

/// Joint-transmission rate: the per-server terms of every linked server add.
pub fn jt_rate(
    user: usize,
    cache: &CacheState,
    assoc: &AssociationState,
    req: &RequestState,
    ch: &ChannelSnapshot,
    cfg: &SimConfig,
) -> f64 {
    let budget = LinkBudget::new(cache, assoc, req, ch, cfg);
    assoc
        .servers_of(user)
        .iter()
        .map(|&e| budget.server_term(e, user))
        .sum()
}

/// Cloud rate; zero when the user is served at the edge.
pub fn cloud_rate(
    user: usize,
    cache: &CacheState,
    assoc: &AssociationState,
    req: &RequestState,
    ch: &ChannelSnapshot,
    cfg: &SimConfig,
) -> f64 {
    LinkBudget::new(cache, assoc, req, ch, cfg).cloud_term(user)
}

/// Total edge + cloud delivery time for one step.
///
/// An edge-served user's delay is `s_f / R_u` with `R_u` summing its linked
/// servers, so single and joint transmission are charged once per user.
pub fn evaluate_delay(
    cache: &CacheState,
    assoc: &AssociationState,
    req: &RequestState,
    ch: &ChannelSnapshot,
    cfg: &SimConfig,
) -> Result<DelayReport, SimError> {
    let num_users = req.num_users();
    let num_edges = cache.num_edges();
    if assoc.num_users() != num_users || ch.cloud_gain.len() != num_users {
        return Err(SimError::Shape(format!(
            "{} requests, {} association rows, {} cloud gains",
            num_users,
            assoc.num_users(),
            ch.cloud_gain.len()
        )));
    }
    let budget = LinkBudget::new(cache, assoc, req, ch, cfg);
    let size = cfg.file_size_bits;
    let mut report = DelayReport {
        edge_delay: 0.0,
        cloud_delay: 0.0,
        total: 0.0,
        per_edge_delay: vec![0.0; num_edges],
        per_user_delay: vec![0.0; num_users],
        per_user_rate: vec![0.0; num_users],
        edge_served: vec![false; num_users],
        hit_count: 0,
        miss_count: 0,
    };
    for u in 0..num_users {
        if budget.edge_indicator(u) {
            let mut rate = 0.0;
            for &e in assoc.servers_of(u) {
                let term = budget.server_term(e, u);
                if term > 0.0 {
                    report.per_edge_delay[e] += size / term;
                }
                rate += term;
            }
            if !(rate > 0.0) {
                return Err(SimError::InconsistentAssociation { user: u });
            }
            let d = size / rate;
            report.per_user_delay[u] = d;
            report.per_user_rate[u] = rate;
            report.edge_served[u] = true;
            report.edge_delay += d;
            report.hit_count += 1;
        } else {
            if !assoc.servers_of(u).is_empty() {
                return Err(SimError::InconsistentAssociation { user: u });
            }
            let rate = budget.cloud_term(u);
            if !(rate > 0.0) {
                return Err(SimError::ZeroCloudRate { user: u });
            }
            let d = size / rate;
            report.per_user_delay[u] = d;
            report.per_user_rate[u] = rate;
            report.cloud_delay += d;
            report.miss_count += 1;
        }
    }
    report.total = report.edge_delay + report.cloud_delay;
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sim::{FileId, NetworkTopology, Point};

    fn one_cell(users: usize) -> NetworkTopology {
        NetworkTopology::from_positions(
            vec![Point::new(0.0, 0.0)],
            (0..users).map(|k| Point::new(10.0 + k as f64, 0.0)).collect(),
            100.0,
        )
    }

    fn cfg() -> SimConfig {
        SimConfig {
            noise_power_w: 1.0,
            file_size_bits: 8e6,
            ..SimConfig::default()
        }
    }

    fn unit_power(edges: usize, users: usize) -> PowerAllocation {
        PowerAllocation {
            edge: vec![vec![1.0; users]; edges],
            cloud: vec![1.0; users],
        }
    }

    #[test]
    fn unit_snr_gives_bandwidth() {
        let topo = one_cell(1);
        let ch = ChannelSnapshot::from_gains(&topo, vec![vec![1.0]], vec![1.0])
            .with_power(unit_power(1, 1));
        let cache = CacheState::from_files(&[vec![FileId(1)]], 2);
        let assoc = AssociationState::from_links(1, vec![vec![0]]);
        let req = RequestState::new(vec![FileId(1)]);
        let r = st_rate(0, 0, &cache, &assoc, &req, &ch, &cfg());
        assert!((r - 4.5e6).abs() < 1e-6);
    }

    #[test]
    fn uncached_file_masks_rate() {
        let topo = one_cell(1);
        let ch = ChannelSnapshot::from_gains(&topo, vec![vec![1.0]], vec![1.0])
            .with_power(unit_power(1, 1));
        let cache = CacheState::from_files(&[vec![FileId(2)]], 2);
        let assoc = AssociationState::from_links(1, vec![vec![0]]);
        let req = RequestState::new(vec![FileId(1)]);
        assert_eq!(st_rate(0, 0, &cache, &assoc, &req, &ch, &cfg()), 0.0);
    }

    #[test]
    fn last_in_sic_order_is_interference_free() {
        let topo = one_cell(2);
        // user 0 is stronger; user 1 is decoded last.
        let ch = ChannelSnapshot::from_gains(&topo, vec![vec![2.0, 1.0]], vec![1.0; 2])
            .with_power(unit_power(1, 2));
        let cache = CacheState::from_files(&[vec![FileId(1)]], 2);
        let assoc = AssociationState::from_links(1, vec![vec![0], vec![0]]);
        let req = RequestState::new(vec![FileId(1), FileId(1)]);
        let c = cfg();
        let weak = st_rate(0, 1, &cache, &assoc, &req, &ch, &c);
        assert!((weak - 4.5e6 * 2f64.log2()).abs() < 1e-6);
        let strong = st_rate(0, 0, &cache, &assoc, &req, &ch, &c);
        assert!((strong - 4.5e6 * (1.0 + 4.0 / 2.0f64).log2()).abs() < 1e-6);
    }

    #[test]
    fn sole_cloud_user_at_three_snr() {
        let topo = one_cell(1);
        let ch = ChannelSnapshot::from_gains(&topo, vec![vec![1.0]], vec![3f64.sqrt()])
            .with_power(unit_power(1, 1));
        let cache = CacheState::from_files(&[vec![FileId(2)]], 2);
        let assoc = AssociationState::all_cloud(1, 1);
        let req = RequestState::new(vec![FileId(1)]);
        let r = cloud_rate(0, &cache, &assoc, &req, &ch, &cfg());
        assert!((r - 9.0e6).abs() < 1e-6);
    }

    #[test]
    fn delay_is_size_over_rate() {
        let topo = one_cell(1);
        // SNR chosen so that 4.5 MHz * log2(1 + snr) = 8 Mbit/s.
        let snr = 2f64.powf(8.0 / 4.5) - 1.0;
        let ch = ChannelSnapshot::from_gains(&topo, vec![vec![snr.sqrt()]], vec![1.0])
            .with_power(unit_power(1, 1));
        let cache = CacheState::from_files(&[vec![FileId(1)]], 2);
        let assoc = AssociationState::from_links(1, vec![vec![0]]);
        let req = RequestState::new(vec![FileId(1)]);
        let rep = evaluate_delay(&cache, &assoc, &req, &ch, &cfg()).unwrap();
        assert!((rep.per_user_delay[0] - 1.0).abs() < 1e-12);
        assert_eq!(rep.hit_count, 1);
    }

    #[test]
    fn linked_user_without_holder_is_inconsistent() {
        let topo = one_cell(1);
        let ch = ChannelSnapshot::from_gains(&topo, vec![vec![1.0]], vec![1.0]);
        let cache = CacheState::from_files(&[vec![FileId(2)]], 2);
        let assoc = AssociationState::from_links(1, vec![vec![0]]);
        let req = RequestState::new(vec![FileId(1)]);
        assert_eq!(
            evaluate_delay(&cache, &assoc, &req, &ch, &cfg()).unwrap_err(),
            SimError::InconsistentAssociation { user: 0 }
        );
    }
}
