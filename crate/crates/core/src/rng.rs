//! Reproducible random streams.
//!
//! Every replicate owns an independent ChaCha8 stream whose key is derived
//! from `(master_seed, replicate_id)`, so results do not depend on how
//! replicates are scheduled across threads.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type GpRng = ChaCha8Rng;

const GOLDEN_GAMMA: u64 = 0x9e37_79b9_7f4a_7c15;

/// SplitMix64 finaliser.
pub fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Seed for replicate `replicate` of an experiment seeded with `master`.
pub fn replicate_seed(master: u64, replicate: u64) -> u64 {
    mix64(mix64(master ^ GOLDEN_GAMMA).wrapping_add(replicate.wrapping_mul(GOLDEN_GAMMA)))
}

pub fn rng_from_seed(seed: u64) -> GpRng {
    let mut key = [0u8; 32];
    let mut s = seed;
    for chunk in key.chunks_exact_mut(8) {
        s = s.wrapping_add(GOLDEN_GAMMA);
        chunk.copy_from_slice(&mix64(s).to_le_bytes());
    }
    ChaCha8Rng::from_seed(key)
}

pub fn replicate_rng(master: u64, replicate: u64) -> GpRng {
    rng_from_seed(replicate_seed(master, replicate))
}
