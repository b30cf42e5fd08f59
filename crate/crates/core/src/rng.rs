//! Seed plumbing. Every random choice in the crate funnels through a
//! ChaCha8 generator keyed by a user seed and, where independence across
//! units matters, a stream id.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type Seed = u64;

pub fn rng(seed: Seed) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Independent generator for unit `stream` (a vertex, a trial, ...) under `seed`.
pub fn stream_rng(seed: Seed, stream: u64) -> ChaCha8Rng {
    let mut r = ChaCha8Rng::seed_from_u64(seed);
    r.set_stream(stream);
    r
}

/// Mixes a seed with a tag so that sub-tasks get unrelated seeds (SplitMix64 finalizer).
pub fn derive(seed: Seed, tag: u64) -> Seed {
    let mut z = seed ^ tag.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}
