//! Seed derivation so that every stochastic choice is a pure function of a
//! master seed plus a position (stage, iteration, hawk, kernel entry, ...).

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type StageRng = ChaCha8Rng;

/// SplitMix64 finalizer.
fn mix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Combine a seed with a sequence of stream coordinates.
pub fn derive_seed(seed: u64, coords: &[u64]) -> u64 {
    coords.iter().fold(mix(seed), |acc, &c| mix(acc ^ mix(c)))
}

pub fn rng_from(seed: u64) -> StageRng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn rng_at(seed: u64, coords: &[u64]) -> StageRng {
    rng_from(derive_seed(seed, coords))
}
