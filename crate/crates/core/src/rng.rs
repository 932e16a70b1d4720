//! Seeded random streams.
//!
//! Every consumer of randomness owns its own ChaCha stream derived from the
//! experiment seed. Traffic draws therefore do not depend on how many numbers a
//! learner consumed, which keeps algorithms comparable under common random
//! numbers.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type SimRng = ChaCha8Rng;

/// Stream identifiers. The numeric values are part of the reproducibility
/// contract; do not renumber.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub enum Stream {
    Topology = 1,
    InitialCache = 2,
    Traffic = 3,
    Policy = 4,
    Transmission = 5,
    Evaluation = 6,
}

pub fn stream(seed: u64, which: Stream) -> SimRng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(which as u64);
    rng
}
