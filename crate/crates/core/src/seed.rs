//! Seed derivation.
//!
//! Every random draw in the crate comes from a `ChaCha8Rng` seeded with a
//! value derived from one master seed, so that a run is reproducible and
//! sub-streams (trees, folds, repeats, channels) are independent.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const GOLDEN_GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;

/// One step of the SplitMix64 output function.
pub fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(GOLDEN_GAMMA);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed of the `stream`-th child of `parent`.
///
/// `derive(s, i) = splitmix64(s + (i + 1)·γ)` where γ is the 64-bit golden
/// ratio constant. Distinct `(parent, stream)` pairs give unrelated seeds.
pub fn derive(parent: u64, stream: u64) -> u64 {
    splitmix64(parent.wrapping_add(stream.wrapping_add(1).wrapping_mul(GOLDEN_GAMMA)))
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}
