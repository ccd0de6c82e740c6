//! Seed streams.
//!
//! Every random quantity in a run is drawn from a generator whose seed is a
//! pure function of the master seed and a path of integer labels, so results
//! do not depend on thread scheduling or evaluation order.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Generator used throughout the crate.
pub type SeedRng = ChaCha8Rng;

/// Labels for the independent streams of a single optimization run.
pub mod stream {
    pub const OBJECTIVE: u64 = 1;
    pub const INITIAL_FIT: u64 = 2;
    pub const REFIT: u64 = 3;
    pub const IID: u64 = 4;
    pub const PROFILE: u64 = 5;
    pub const ENTROPY: u64 = 6;
    pub const FANTASY_NOISE: u64 = 7;
    pub const OBJECTIVE_DRAW: u64 = 8;
    pub const REPLICATE: u64 = 9;
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Derives a child seed from `seed` and a path of labels.
pub fn derive_seed(seed: u64, path: &[u64]) -> u64 {
    path.iter()
        .fold(splitmix64(seed), |acc, &label| splitmix64(acc ^ splitmix64(label)))
}

pub fn seeded(seed: u64) -> SeedRng {
    SeedRng::seed_from_u64(seed)
}

/// Shorthand for `seeded(derive_seed(seed, path))`.
pub fn stream_rng(seed: u64, path: &[u64]) -> SeedRng {
    seeded(derive_seed(seed, path))
}
