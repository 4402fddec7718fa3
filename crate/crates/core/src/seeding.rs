//! Stateless seed derivation for Monte Carlo replicates.
//!
//! Every replicate gets its own generator seeded from `(master, index)`, so
//! a batch produces the same numbers no matter how many threads run it or
//! in which order replicates finish.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type ReplicateRng = ChaCha8Rng;

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Mix a master seed and a replicate index into an independent-looking seed.
pub fn derive_seed(master: u64, index: u64) -> u64 {
    splitmix64(splitmix64(master) ^ splitmix64(index.wrapping_add(0x632B_E59B_D9B4_E019)))
}

/// Seed derivation for nested loops (outer replicate, inner replicate).
pub fn derive_seed2(master: u64, outer: u64, inner: u64) -> u64 {
    derive_seed(derive_seed(master, outer), inner)
}

pub fn rng_for(master: u64, index: u64) -> ReplicateRng {
    ReplicateRng::seed_from_u64(derive_seed(master, index))
}

pub fn rng_from_seed(seed: u64) -> ReplicateRng {
    ReplicateRng::seed_from_u64(seed)
}
