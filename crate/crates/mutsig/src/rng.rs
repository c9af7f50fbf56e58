//! Seeded, portable randomness.
//!
//! All randomness in the crate flows through ChaCha8, a counter-based
//! generator with identical output on every platform. Independent streams
//! (bootstrap replicates, per-fit initializations) derive child seeds from a
//! master seed through a SplitMix64 mix, so replicate `i` is reproducible on
//! its own regardless of scheduling.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// SplitMix64 finalizer; bijective on u64, good avalanche.
pub fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Derive the seed for an independent child stream of `master`.
pub fn child_seed(master: u64, stream: u64) -> u64 {
    splitmix64(master ^ splitmix64(stream.wrapping_add(0x5851_f42d_4c95_7f2d)))
}

/// A fresh generator for the given seed.
pub fn rng_from_seed(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}
