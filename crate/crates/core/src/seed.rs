//! Seed derivation. Every random stream in the crate is a ChaCha8 generator
//! keyed by a 64-bit seed mixed from a parent seed and an index, so results
//! never depend on scheduling or thread count.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// SplitMix64 finalizer.
fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Derive a child seed from `(parent, index)`.
pub fn mix(parent: u64, index: u64) -> u64 {
    splitmix(splitmix(parent) ^ index.wrapping_mul(0xD6E8_FEB8_6659_FD93))
}

/// Derive a child seed from a parent seed and a string key (e.g. a unit id).
pub fn mix_str(parent: u64, key: &str) -> u64 {
    // FNV-1a over the key, then mixed with the parent.
    let mut h: u64 = 0xCBF2_9CE4_8422_2325;
    for b in key.bytes() {
        h ^= u64::from(b);
        h = h.wrapping_mul(0x0000_0100_0000_01B3);
    }
    mix(parent, h)
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}
