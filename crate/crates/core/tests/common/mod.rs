//! Test-side helpers shared by the integration targets. The delay evaluator
//! here is written from the rate/delay equations directly and does not call
//! into the simulator's own rate code.

#![allow(dead_code)]

use edgecache::mabla::{build_association, Arm};
use edgecache::rng::SimRng;
use edgecache::sim::{sample_channels, sample_requests, sample_topology};
use edgecache::{
    AssociationState, CacheState, ChannelSnapshot, FileId, NetworkTopology, RequestState, SimConfig,
};
use rand::seq::SliceRandom;
use rand::Rng;

/// Per-user delays and their sum.
#[derive(Debug, Clone)]
pub struct ReferenceDelay {
    pub per_user: Vec<f64>,
    pub total: f64,
}

/// Straight transcription of the delay model:
///
/// * power: `P/2` split evenly over all edge links, `P/2` over cloud users;
/// * SINR at server `e` for user `u` counts users after `u` in the
///   descending-gain order of `U^e` that are linked to `e` and ask for the
///   same file;
/// * an edge-served user's rate is the sum of its linked holders' terms;
/// * cloud users interfere with every other cloud user.
pub fn reference_delay(
    topo: &NetworkTopology,
    cache: &CacheState,
    assoc: &AssociationState,
    req: &RequestState,
    ch: &ChannelSnapshot,
    cfg: &SimConfig,
) -> ReferenceDelay {
    let n_e = topo.num_edges();
    let n_u = topo.num_users();
    let y = |e: usize, u: usize| -> bool { assoc.servers_of(u).contains(&e) };
    let x = |e: usize, f: FileId| -> bool { (0..cache.num_slots()).any(|s| cache.slot(e, s) == Some(f)) };

    let mut links = 0usize;
    let mut cloud_users = 0usize;
    for u in 0..n_u {
        let k = (0..n_e).filter(|&e| y(e, u)).count();
        links += k;
        if k == 0 {
            cloud_users += 1;
        }
    }
    let p_link = if links > 0 { cfg.peak_power_w / 2.0 / links as f64 } else { 0.0 };
    let p_cloud = if cloud_users > 0 {
        cfg.peak_power_w / 2.0 / cloud_users as f64
    } else {
        0.0
    };

    let rx_edge = |e: usize, u: usize| -> f64 {
        let p = if y(e, u) { p_link } else { 0.0 };
        (ch.edge_gain[e][u] * p).powi(2)
    };
    let edge_served = |u: usize| -> bool { (0..n_e).any(|e| y(e, u) && x(e, req.files()[u])) };

    let mut per_user = vec![0.0; n_u];
    for u in 0..n_u {
        let f = req.files()[u];
        if edge_served(u) {
            let mut rate = 0.0;
            for e in 0..n_e {
                if !(y(e, u) && x(e, f)) {
                    continue;
                }
                // decode order at e: covered users by descending gain, ties by id
                let mut order: Vec<usize> = (0..n_u).filter(|&i| topo.covers(e, i)).collect();
                order.sort_by(|&a, &b| {
                    ch.edge_gain[e][b]
                        .partial_cmp(&ch.edge_gain[e][a])
                        .unwrap()
                        .then(a.cmp(&b))
                });
                let pos = order.iter().position(|&i| i == u).unwrap();
                let mut interference = 0.0;
                for &i in &order[pos + 1..] {
                    if y(e, i) && req.files()[i] == f {
                        interference += rx_edge(e, i);
                    }
                }
                let sinr = rx_edge(e, u) / (interference + cfg.noise_power_w);
                rate += cfg.bandwidth_edge_hz * (1.0 + sinr).log2();
            }
            per_user[u] = cfg.file_size_bits / rate;
        } else {
            let rx = |i: usize| (ch.cloud_gain[i] * p_cloud).powi(2);
            let mut interference = 0.0;
            for i in 0..n_u {
                if i != u && !edge_served(i) {
                    interference += rx(i);
                }
            }
            let sinr = rx(u) / (interference + cfg.noise_power_w);
            per_user[u] = cfg.file_size_bits / (cfg.bandwidth_cloud_hz * (1.0 + sinr).log2());
        }
    }
    let total = per_user.iter().sum();
    ReferenceDelay { per_user, total }
}

/// Random cache contents: `slots` distinct files per edge.
pub fn random_cache<R: Rng>(cfg: &SimConfig, rng: &mut R) -> CacheState {
    let mut all: Vec<FileId> = (0..cfg.num_files).map(FileId::from_index).collect();
    let files: Vec<Vec<FileId>> = (0..cfg.num_edges)
        .map(|_| {
            all.shuffle(rng);
            all[..cfg.cache_slots].to_vec()
        })
        .collect();
    CacheState::from_files(&files, cfg.num_files)
}

/// Random single/joint choice for every user, turned into links.
pub fn random_association<R: Rng>(
    topo: &NetworkTopology,
    cache: &CacheState,
    req: &RequestState,
    ch: &ChannelSnapshot,
    rng: &mut R,
) -> AssociationState {
    let arms: Vec<Arm> = (0..topo.num_users())
        .map(|_| if rng.random::<bool>() { Arm::Joint } else { Arm::Single })
        .collect();
    build_association(topo, cache, req, ch, &arms)
}

/// One frozen random instance of the given configuration.
pub struct Instance {
    pub topo: NetworkTopology,
    pub cache: CacheState,
    pub req: RequestState,
    pub ch: ChannelSnapshot,
    pub assoc: AssociationState,
}

pub fn random_instance(cfg: &SimConfig, rng: &mut SimRng) -> Instance {
    let topo = sample_topology(cfg, rng).expect("topology");
    let cache = random_cache(cfg, rng);
    let req = sample_requests(cfg, &topo, rng);
    let ch = sample_channels(cfg, &topo, rng);
    let assoc = random_association(&topo, &cache, &req, &ch, rng);
    Instance {
        topo,
        cache,
        req,
        ch,
        assoc,
    }
}

/// `|a - b| / max(|a|, |b|)`, zero when both are zero.
pub fn rel_err(a: f64, b: f64) -> f64 {
    let scale = a.abs().max(b.abs());
    if scale == 0.0 {
        0.0
    } else {
        (a - b).abs() / scale
    }
}

/// The small desk-scale setup used by the learning experiments.
pub fn desk_sim() -> SimConfig {
    SimConfig {
        num_edges: 3,
        num_files: 20,
        cache_slots: 5,
        cache_capacity_bits: 5.0 * 8e6,
        fixed_users: Some(10),
        ..SimConfig::default()
    }
}
