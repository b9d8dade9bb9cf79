//! Seed derivation for replayable ensembles.
//!
//! Run `i` of an experiment with master seed `m` uses `derive_seed(m, i)`.
//! Inside a run, independent randomness (event clock, gradient noise) comes
//! from distinct ChaCha8 streams of that run seed, so toggling the noise never
//! perturbs the event times.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub const CLOCK_STREAM: u64 = 0;
pub const NOISE_STREAM: u64 = 1;

/// SplitMix64 finalizer.
pub fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    x = (x ^ (x >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    x ^ (x >> 31)
}

/// Per-run seed: `splitmix64(master ^ splitmix64(run))`.
pub fn derive_seed(master: u64, run: u64) -> u64 {
    splitmix64(master ^ splitmix64(run))
}

pub fn stream(seed: u64, id: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(id);
    rng
}
