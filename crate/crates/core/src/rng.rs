//! Seeded random substreams.
//!
//! Every trial owns a 64-bit seed derived from `(master_seed, trial_index)`.
//! That seed keys a ChaCha8 generator and each user draws from its own
//! ChaCha stream (`stream = user index`). A trial can therefore be
//! regenerated in isolation, in any order, on any worker, and the first `K'`
//! users of a `K`-user realization are identical to a `K'`-user realization
//! with the same trial seed.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const GOLDEN_GAMMA: u64 = 0x9e37_79b9_7f4a_7c15;

/// SplitMix64 finalizer.
fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Seed of trial `trial_index` under `master_seed`.
pub fn trial_seed(master_seed: u64, trial_index: u64) -> u64 {
    mix64(mix64(master_seed) ^ trial_index.wrapping_add(1).wrapping_mul(GOLDEN_GAMMA))
}

/// Generator for `user` inside the trial keyed by `trial_seed`.
pub fn user_stream(trial_seed: u64, user: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(trial_seed);
    rng.set_stream(user);
    rng
}
