//! Seed derivation for reproducible batches.
//!
//! Every stochastic routine draws from a [`ChaCha8Rng`] seeded through
//! `SeedableRng::seed_from_u64`. Independent streams (solver run `k`,
//! instance `i`, ...) are obtained by hashing the parent seed with the
//! stream index through the SplitMix64 finalizer:
//!
//! ```text
//! splitmix64(z):
//!     z += 0x9E37_79B9_7F4A_7C15
//!     z  = (z ^ (z >> 30)) * 0xBF58_476D_1CE4_E5B9
//!     z  = (z ^ (z >> 27)) * 0x94D0_49BB_1331_11EB
//!     return z ^ (z >> 31)
//!
//! mix(seed, stream) = splitmix64(seed ^ splitmix64(stream))
//! ```
//!
//! All arithmetic wraps modulo 2^64.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// The generator used everywhere in the crate.
pub type SolverRng = ChaCha8Rng;

pub const fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Derives the seed of sub-stream `stream` from `seed`.
pub const fn mix(seed: u64, stream: u64) -> u64 {
    splitmix64(seed ^ splitmix64(stream))
}

pub fn rng_from_seed(seed: u64) -> SolverRng {
    ChaCha8Rng::seed_from_u64(seed)
}
