//! Seed derivation.
//!
//! Every random choice in the crate flows from a single master seed. Work
//! units (trees, windows, sweep cells) derive their own stream from the
//! master seed and a key, so the order in which units execute never changes
//! the output.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Generator used throughout the crate.
pub type PifRng = ChaCha8Rng;

const GOLDEN: u64 = 0x9e37_79b9_7f4a_7c15;

/// SplitMix64 finalizer.
#[inline]
pub fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Derives the seed of a keyed substream of `master`.
pub fn substream(master: u64, key: u64) -> u64 {
    mix64(master ^ mix64(key.wrapping_add(1).wrapping_mul(GOLDEN)))
}

/// Derives a seed from a chain of keys.
pub fn substream_path(master: u64, keys: &[u64]) -> u64 {
    keys.iter().fold(master, |seed, &k| substream(seed, k))
}

pub fn rng_from_seed(seed: u64) -> PifRng {
    PifRng::seed_from_u64(seed)
}

/// Uniform double in `[0, 1)` from the top 53 bits of `x`.
#[inline]
pub fn unit_f64(x: u64) -> f64 {
    (x >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}
