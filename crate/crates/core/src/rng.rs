//! Counter-based random streams.
//!
//! Every independent unit of work (one simulated event, one training epoch)
//! gets its own ChaCha8 stream derived from `(seed, domain, index)`, so the
//! result never depends on how work is scheduled across threads.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type StreamRng = ChaCha8Rng;

/// Named stream families. Keeps streams of different purposes disjoint.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub enum StreamDomain {
    SignalEvent = 1,
    BackgroundEvent = 2,
    Split = 3,
    Shuffle = 4,
    Init = 5,
    Custom = 15,
}

/// RNG for item `index` of `domain` under `seed`.
pub fn stream(seed: u64, domain: StreamDomain, index: u64) -> StreamRng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    // 4 bits of domain, 60 bits of index.
    rng.set_stream(((domain as u64) << 60) | (index & ((1u64 << 60) - 1)));
    rng
}
