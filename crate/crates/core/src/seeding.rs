//! Deterministic seed derivation. Every random stream in the crate is a
//! ChaCha8 generator keyed by a base seed and a stream label.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Mixes a base seed with any number of stream coordinates.
pub fn derive(seed: u64, coords: &[u64]) -> u64 {
    coords
        .iter()
        .fold(splitmix64(seed), |acc, &c| splitmix64(acc ^ splitmix64(c)))
}

pub fn rng(seed: u64, coords: &[u64]) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(derive(seed, coords))
}

// Stream labels.
pub(crate) const WORDS: u64 = 1;
pub(crate) const PROTOTYPES: u64 = 2;
pub(crate) const DOMAINS: u64 = 3;
pub(crate) const PAIRS: u64 = 4;
pub(crate) const TEXT_MAP: u64 = 5;
pub(crate) const IMAGE_MAP: u64 = 6;
pub(crate) const TASK: u64 = 7;
pub(crate) const INIT: u64 = 8;
pub(crate) const SPLIT: u64 = 9;
pub(crate) const SHOTS: u64 = 10;
pub(crate) const CLUSTER: u64 = 11;
pub(crate) const SHARED: u64 = 12;
