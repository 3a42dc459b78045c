//! Deterministic seed derivation.
//!
//! Every stochastic routine in this crate draws from a ChaCha stream whose
//! seed is derived by mixing a master seed with a list of context words
//! (grid indices, replicate index, method id, restart index, ...).  The mix
//! is a fixed splitmix64 fold, so streams are identical across platforms and
//! independent of thread scheduling: a replicate's randomness depends only on
//! its coordinates, never on which worker ran it.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha12Rng;

/// One splitmix64 step: mixes `x` into a well-distributed 64-bit value.
fn splitmix64(x: u64) -> u64 {
    let mut z = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Folds `words` into `seed`, one splitmix64 step per word.
pub fn mix(seed: u64, words: &[u64]) -> u64 {
    let mut acc = splitmix64(seed);
    for &w in words {
        acc = splitmix64(acc ^ w);
    }
    acc
}

/// A seedable, counter-based generator for the stream at `(seed, words)`.
pub fn stream(seed: u64, words: &[u64]) -> ChaCha12Rng {
    ChaCha12Rng::seed_from_u64(mix(seed, words))
}
