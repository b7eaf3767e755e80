//! Reproducible random streams.
//!
//! Every randomized stage derives its generators from one 64-bit master seed.
//! A generator is identified by `(seed, domain, index)`: the ChaCha8 key is
//! expanded from `seed`, and the stream id is `domain << 56 | index`. Work
//! unit `index` (a bootstrap resample, a block of simulated draws) always sees
//! the same numbers no matter how the work is scheduled.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Independent families of streams drawn from one master seed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u8)]
pub enum StreamDomain {
    Sampling = 1,
    Bootstrap = 2,
}

const INDEX_MASK: u64 = (1 << 56) - 1;

/// Generator for work unit `index` of `domain`.
pub fn substream(seed: u64, domain: StreamDomain, index: u64) -> ChaCha8Rng {
    debug_assert!(index <= INDEX_MASK);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(((domain as u64) << 56) | (index & INDEX_MASK));
    rng
}

/// Fresh seed from operating-system entropy, used when no seed was given.
pub fn entropy_seed() -> u64 {
    rand::random()
}
