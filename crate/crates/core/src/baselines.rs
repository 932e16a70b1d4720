//! Demand-fill replacement baselines: LRU, LFU and FIFO.
//!
//! Every request routed to an edge touches its cache. A hit refreshes the slot
//! metadata; a miss fills an empty slot if one exists and otherwise evicts a
//! victim chosen by the policy, then inserts the requested file.

use serde::{Deserialize, Serialize};

use crate::sim::{CacheState, FileId, NetworkTopology, RequestState};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum BaselinePolicyKind {
    Lru,
    Lfu,
    Fifo,
}

impl BaselinePolicyKind {
    pub const ALL: [BaselinePolicyKind; 3] = [Self::Lru, Self::Lfu, Self::Fifo];

    pub fn name(self) -> &'static str {
        match self {
            Self::Lru => "LRU",
            Self::Lfu => "LFU",
            Self::Fifo => "FIFO",
        }
    }

    /// Slot to evict from a full cache row.
    fn victim(self, cache: &CacheState, edge: usize) -> usize {
        let slots = 0..cache.num_slots();
        match self {
            // least recent access, then lowest slot
            Self::Lru => slots
                .min_by_key(|&k| (cache.meta(edge, k).last_access, k))
                .expect("non-empty cache"),
            // lowest count, then least recent, then lowest slot
            Self::Lfu => slots
                .min_by_key(|&k| {
                    let m = cache.meta(edge, k);
                    (m.frequency, m.last_access, k)
                })
                .expect("non-empty cache"),
            // oldest insertion, then lowest slot
            Self::Fifo => slots
                .min_by_key(|&k| (cache.meta(edge, k).inserted_at, k))
                .expect("non-empty cache"),
        }
    }
}

impl std::fmt::Display for BaselinePolicyKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// Result of routing one request through a baseline cache.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Access {
    Hit { slot: usize },
    Filled { slot: usize },
    Evicted { slot: usize, evicted: FileId },
}

pub fn baseline_update(
    policy: BaselinePolicyKind,
    cache: &mut CacheState,
    edge: usize,
    requested: FileId,
) -> Access {
    let now = cache.tick();
    if let Some(slot) = cache.slot_of(edge, requested) {
        let m = cache.meta_mut(edge, slot);
        m.last_access = now;
        m.frequency += 1;
        return Access::Hit { slot };
    }
    if let Some(slot) = cache.slots(edge).iter().position(Option::is_none) {
        cache.set_slot(edge, slot, Some(requested));
        return Access::Filled { slot };
    }
    let slot = policy.victim(cache, edge);
    let evicted = cache.slot(edge, slot).expect("full row");
    cache.set_slot(edge, slot, Some(requested));
    Access::Evicted { slot, evicted }
}

/// Feeds every covered user's request (ascending user id) into each edge.
pub fn baseline_step(
    policy: BaselinePolicyKind,
    cache: &mut CacheState,
    topology: &NetworkTopology,
    req: &RequestState,
) {
    for e in 0..topology.num_edges() {
        for &u in topology.users_covered_by(e) {
            baseline_update(policy, cache, e, req.file(u));
        }
    }
}
