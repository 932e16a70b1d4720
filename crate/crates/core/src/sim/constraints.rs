use serde::{Deserialize, Serialize};

use super::{
    AssociationState, CacheState, ChannelSnapshot, FileId, Mode, NetworkTopology, SimConfig,
};

/// A broken feasibility constraint with the offending indices.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Violation {
    /// C1: `x[e][f]` is not a 0/1 value (the file occupies several slots) or
    /// names a file outside the library.
    CacheNotBinary { edge: usize, file: FileId },
    /// C2: `y[e][u]` links a server that does not cover the user, or the
    /// recorded mode disagrees with the link count.
    AssociationInvalid { edge: Option<usize>, user: usize },
    /// C3: cached bits exceed `C_e`.
    CapacityExceeded { edge: usize, used_bits: f64, capacity_bits: f64 },
    /// C4: total transmit power exceeds the system peak.
    PowerExceeded { total_w: f64, peak_w: f64 },
}

/// Relative slack on the power comparison so that an exact split of `P`
/// does not trip on rounding.
const POWER_SLACK: f64 = 1e-12;

pub fn check_constraints(
    cache: &CacheState,
    assoc: &AssociationState,
    ch: &ChannelSnapshot,
    topology: &NetworkTopology,
    cfg: &SimConfig,
) -> Vec<Violation> {
    let mut out = Vec::new();
    for e in 0..cache.num_edges() {
        let mut seen = vec![0u32; cache.num_files()];
        for f in cache.files(e) {
            if f.0 == 0 || f.index() >= cache.num_files() {
                out.push(Violation::CacheNotBinary { edge: e, file: f });
                continue;
            }
            seen[f.index()] += 1;
            if seen[f.index()] == 2 {
                out.push(Violation::CacheNotBinary { edge: e, file: f });
            }
        }
        let used = cache.occupied(e) as f64 * cfg.file_size_bits;
        if used > cfg.cache_capacity_bits {
            out.push(Violation::CapacityExceeded {
                edge: e,
                used_bits: used,
                capacity_bits: cfg.cache_capacity_bits,
            });
        }
    }
    for u in 0..assoc.num_users() {
        let servers = assoc.servers_of(u);
        for &e in servers {
            if u >= topology.num_users() || e >= topology.num_edges() || !topology.covers(e, u) {
                out.push(Violation::AssociationInvalid { edge: Some(e), user: u });
            }
        }
        let consistent = match assoc.mode(u) {
            Mode::Cloud => servers.is_empty(),
            Mode::Single => servers.len() == 1,
            Mode::Joint => servers.len() >= 2,
        };
        if !consistent {
            out.push(Violation::AssociationInvalid { edge: None, user: u });
        }
    }
    let total = ch.powers(assoc, cfg).total();
    if total > cfg.peak_power_w * (1.0 + POWER_SLACK) {
        out.push(Violation::PowerExceeded {
            total_w: total,
            peak_w: cfg.peak_power_w,
        });
    }
    out
}
