// SPDX-License-Identifier: Apache-2.0

//! Seeded random streams.
//!
//! Every random draw in the crate comes from a [`ChaCha8Rng`] keyed by a
//! 64-bit `seed` and a 64-bit `index`: the seed is expanded with
//! `seed_from_u64` and the index selects the ChaCha stream via `set_stream`.
//! Ensemble member `i` of a sweep always uses stream `(seed, i)`, so results
//! do not depend on how the work is scheduled across threads.
//!
//! Gaussian variates use the ziggurat sampler of `rand_distr::StandardNormal`,
//! which is a deterministic transform of the uniform stream.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub use rand_chacha::ChaCha8Rng as StreamRng;

/// Random stream for ensemble member `index` under `seed`.
pub fn stream(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// Derives an independent sub-seed, used when one member needs its own
/// family of streams (e.g. bootstrap resampling inside a sweep).
pub fn derive_seed(seed: u64, index: u64) -> u64 {
    // splitmix64 finalizer over the pair
    let mut z = seed ^ index.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}
