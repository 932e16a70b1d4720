//! Exhaustive solvers for tiny instances.

use std::cmp::Ordering;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::mabla::{build_association, Arm};
use crate::sim::{
    evaluate_delay, AssociationState, CacheState, ChannelSnapshot, FileId, NetworkTopology,
    RequestState, SimConfig,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct OracleBudget {
    pub max_configs: u128,
}

impl Default for OracleBudget {
    fn default() -> Self {
        Self {
            max_configs: 1_000_000,
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum OracleError {
    #[error("search space of {size} configurations exceeds the budget of {max}")]
    BudgetExceeded { size: u128, max: u128 },
    #[error("no configuration could be evaluated")]
    Infeasible,
}

#[derive(Debug, Clone, PartialEq)]
pub struct JointOptimum {
    pub cache: CacheState,
    pub association: AssociationState,
    /// Arm of every user; only the multi-covered users' entries matter.
    pub arms: Vec<Arm>,
    pub total_delay: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TransmissionOptimum {
    pub association: AssociationState,
    pub arms: Vec<Arm>,
    pub total_delay: f64,
}

fn binomial(n: usize, k: usize) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    (0..k).fold(1u128, |acc, i| acc * (n - i) as u128 / (i + 1) as u128)
}

/// All `k`-subsets of `0..n` in lexicographic order.
pub fn combinations(n: usize, k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    if k > n {
        return out;
    }
    let mut c: Vec<usize> = (0..k).collect();
    loop {
        out.push(c.clone());
        let Some(i) = (0..k).rev().find(|&i| c[i] != i + n - k) else {
            return out;
        };
        c[i] += 1;
        for j in i + 1..k {
            c[j] = c[j - 1] + 1;
        }
    }
}

/// `C(F, F1)^E · 2^|U^E|`, saturating.
pub fn joint_search_size(cfg: &SimConfig, topology: &NetworkTopology) -> u128 {
    let per_edge = binomial(cfg.num_files, cfg.cache_slots);
    let caches = (0..topology.num_edges()).fold(1u128, |acc, _| acc.saturating_mul(per_edge));
    caches.saturating_mul(mode_count(topology))
}

fn mode_count(topology: &NetworkTopology) -> u128 {
    let m = topology.multi_covered_users().len();
    if m >= 127 {
        u128::MAX
    } else {
        1u128 << m
    }
}

fn arms_from_mask(num_users: usize, multi: &[usize], mask: u64) -> Vec<Arm> {
    let mut arms = vec![Arm::Single; num_users];
    for (bit, &u) in multi.iter().enumerate() {
        if mask >> bit & 1 == 1 {
            arms[u] = Arm::Joint;
        }
    }
    arms
}

/// Smaller delay wins; equal delays fall back to the lexicographic key.
fn better(delay: f64, key: &[usize], best: &Option<(f64, Vec<usize>)>) -> bool {
    match best {
        None => true,
        Some((d, k)) => match delay.total_cmp(d) {
            Ordering::Less => true,
            Ordering::Greater => false,
            Ordering::Equal => key < k.as_slice(),
        },
    }
}

fn total_or_inf(
    cache: &CacheState,
    assoc: &AssociationState,
    req: &RequestState,
    ch: &ChannelSnapshot,
    cfg: &SimConfig,
) -> f64 {
    evaluate_delay(cache, assoc, req, ch, cfg).map_or(f64::INFINITY, |r| r.total)
}

/// Best single/joint choice for every multi-covered user with caches frozen.
pub fn oracle_transmission(
    cfg: &SimConfig,
    topology: &NetworkTopology,
    cache: &CacheState,
    req: &RequestState,
    ch: &ChannelSnapshot,
    budget: OracleBudget,
) -> Result<TransmissionOptimum, OracleError> {
    let size = mode_count(topology);
    if size > budget.max_configs {
        return Err(OracleError::BudgetExceeded {
            size,
            max: budget.max_configs,
        });
    }
    let multi = topology.multi_covered_users();
    let num_users = topology.num_users();
    let mut best: Option<(f64, Vec<usize>)> = None;
    let mut best_arms = Vec::new();
    for mask in 0..size as u64 {
        let arms = arms_from_mask(num_users, &multi, mask);
        let assoc = build_association(topology, cache, req, ch, &arms);
        let delay = total_or_inf(cache, &assoc, req, ch, cfg);
        let key: Vec<usize> = multi.iter().map(|&u| arms[u].index()).collect();
        if better(delay, &key, &best) {
            best = Some((delay, key));
            best_arms = arms;
        }
    }
    match best {
        Some((d, _)) if d.is_finite() => Ok(TransmissionOptimum {
            association: build_association(topology, cache, req, ch, &best_arms),
            arms: best_arms,
            total_delay: d,
        }),
        _ => Err(OracleError::Infeasible),
    }
}

/// Minimum total delay over every choice of `F1` distinct files per edge and
/// every single/joint assignment of the multi-covered users.
pub fn oracle_joint(
    cfg: &SimConfig,
    topology: &NetworkTopology,
    req: &RequestState,
    ch: &ChannelSnapshot,
    budget: OracleBudget,
) -> Result<JointOptimum, OracleError> {
    let size = joint_search_size(cfg, topology);
    if size > budget.max_configs {
        return Err(OracleError::BudgetExceeded {
            size,
            max: budget.max_configs,
        });
    }
    let subsets: Vec<Vec<FileId>> = combinations(cfg.num_files, cfg.cache_slots)
        .into_iter()
        .map(|c| c.into_iter().map(FileId::from_index).collect())
        .collect();
    let num_edges = topology.num_edges();
    let multi = topology.multi_covered_users();
    let num_users = topology.num_users();
    let mut choice = vec![0usize; num_edges];
    let mut best: Option<(f64, Vec<usize>)> = None;
    let mut best_choice = Vec::new();
    let mut best_arms = Vec::new();
    'outer: loop {
        let files: Vec<Vec<FileId>> = choice.iter().map(|&i| subsets[i].clone()).collect();
        let cache = CacheState::from_files(&files, cfg.num_files);
        for mask in 0..mode_count(topology) as u64 {
            let arms = arms_from_mask(num_users, &multi, mask);
            let assoc = build_association(topology, &cache, req, ch, &arms);
            let delay = total_or_inf(&cache, &assoc, req, ch, cfg);
            let mut key = choice.clone();
            key.extend(multi.iter().map(|&u| arms[u].index()));
            if better(delay, &key, &best) {
                best = Some((delay, key));
                best_choice = choice.clone();
                best_arms = arms;
            }
        }
        for e in (0..num_edges).rev() {
            choice[e] += 1;
            if choice[e] < subsets.len() {
                continue 'outer;
            }
            choice[e] = 0;
        }
        break;
    }
    match best {
        Some((d, _)) if d.is_finite() => {
            let files: Vec<Vec<FileId>> = best_choice.iter().map(|&i| subsets[i].clone()).collect();
            let cache = CacheState::from_files(&files, cfg.num_files);
            Ok(JointOptimum {
                association: build_association(topology, &cache, req, ch, &best_arms),
                cache,
                arms: best_arms,
                total_delay: d,
            })
        }
        _ => Err(OracleError::Infeasible),
    }
}
