//! Deterministic random streams.
//!
//! Every chain runs on a ChaCha8 generator. Seeds for per-replicate streams
//! are derived from `(root_seed, n, replicate)` with the SplitMix64 finalizer,
//! so streams for different cells never share a key.

use rand::distr::Open01;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// The generator used throughout the crate.
pub type AfcRng = ChaCha8Rng;

/// SplitMix64 output function.
pub fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed for replicate `replicate` at sample size `n` under `root_seed`.
pub fn derive_seed(root_seed: u64, n: u64, replicate: u64) -> u64 {
    splitmix64(splitmix64(splitmix64(root_seed) ^ n) ^ replicate)
}

pub fn stream(seed: u64) -> AfcRng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// A uniform draw on the open interval `(0, 1)`.
#[inline]
pub fn uniform_open01<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    rng.sample(Open01)
}
