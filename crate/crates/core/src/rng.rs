//! Seed handling.
//!
//! Every randomized routine takes an explicit generator. A single run seed is
//! expanded into independent per-component streams with a SplitMix64-style
//! counter hash, so adding a component never perturbs the others.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// The generator used throughout the crate.
pub type SeededRng = ChaCha8Rng;

/// One SplitMix64 finalization round.
pub fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Derives the seed of child stream `index` from `seed`.
pub fn derive_seed(seed: u64, index: u64) -> u64 {
    splitmix64(splitmix64(seed) ^ splitmix64(index.wrapping_add(0xA076_1D64_78BD_642F)))
}

/// Derives a child seed from a textual tag (e.g. `"target"`, `"init"`).
pub fn derive_seed_tagged(seed: u64, tag: &str) -> u64 {
    // FNV-1a over the tag bytes, then mixed with the parent seed.
    let mut h: u64 = 0xCBF2_9CE4_8422_2325;
    for b in tag.bytes() {
        h ^= u64::from(b);
        h = h.wrapping_mul(0x0000_0100_0000_01B3);
    }
    derive_seed(seed, h)
}

pub fn rng_from_seed(seed: u64) -> SeededRng {
    SeededRng::seed_from_u64(seed)
}

/// Generator for child stream `index` of `seed`.
pub fn child_rng(seed: u64, index: u64) -> SeededRng {
    rng_from_seed(derive_seed(seed, index))
}
