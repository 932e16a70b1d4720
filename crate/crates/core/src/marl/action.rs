use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::sim::{CacheState, FileId};

/// Per-edge caching action `a_e ∈ {0, …, F1·F}`; 0 leaves the cache alone.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct CacheAction(pub u32);

impl CacheAction {
    pub const NO_OP: CacheAction = CacheAction(0);

    pub fn index(self) -> usize {
        self.0 as usize
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Decoded {
    NoOp,
    /// Replace the file in `slot` (0-based) with `file`.
    Replace { slot: usize, file: FileId },
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("action {action} outside 0..={max}")]
pub struct ActionOutOfRange {
    pub action: u32,
    pub max: u32,
}

/// `b = a − 1`, slot `b / F`, file `b mod F + 1`.
pub fn decode_action(
    action: CacheAction,
    slots: usize,
    num_files: usize,
) -> Result<Decoded, ActionOutOfRange> {
    let max = (slots * num_files) as u32;
    if action.0 > max {
        return Err(ActionOutOfRange {
            action: action.0,
            max,
        });
    }
    if action.0 == 0 {
        return Ok(Decoded::NoOp);
    }
    let b = action.index() - 1;
    Ok(Decoded::Replace {
        slot: b / num_files,
        file: FileId::from_index(b % num_files),
    })
}

pub fn encode_action(slot: usize, file: FileId, num_files: usize) -> CacheAction {
    CacheAction((slot * num_files + file.index() + 1) as u32)
}

/// Applies a decoded action at `edge`. Adding a file that already sits in
/// another slot would duplicate it, so that case is a no-op. Returns whether
/// the cache changed.
pub fn apply_cache_action(cache: &mut CacheState, edge: usize, decoded: Decoded) -> bool {
    match decoded {
        Decoded::NoOp => false,
        Decoded::Replace { slot, file } => {
            if cache.holds(edge, file) {
                return false;
            }
            cache.set_slot(edge, slot, Some(file));
            true
        }
    }
}
