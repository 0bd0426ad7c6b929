//! Deterministic substream derivation.
//!
//! Every random draw in the crate comes from a ChaCha stream keyed by a
//! SplitMix64 hash chain over `(seed, stream ids...)`. Streams for distinct
//! id tuples are independent for Monte Carlo purposes, and a computation
//! keyed this way is reproducible bit-for-bit regardless of thread count or
//! evaluation order.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha12Rng;

/// SplitMix64 finalizer; decorrelates consecutive ids.
fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e3779b97f4a7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
    z ^ (z >> 31)
}

/// RNG for the substream identified by `ids` under the master `seed`.
pub fn substream(seed: u64, ids: &[u64]) -> ChaCha12Rng {
    let mut h = splitmix64(seed ^ 0x6a09e667f3bcc908);
    for &id in ids {
        h = splitmix64(h ^ splitmix64(id));
    }
    let mut key = [0u8; 32];
    let mut s = h;
    for chunk in key.chunks_exact_mut(8) {
        s = splitmix64(s);
        chunk.copy_from_slice(&s.to_le_bytes());
    }
    ChaCha12Rng::from_seed(key)
}

/// Derive a child seed for an indexed replication (e.g. Monte Carlo path
/// `i` of a batch keyed by `seed`). Children of distinct `(seed, id)` pairs
/// are decorrelated.
pub fn mix(seed: u64, id: u64) -> u64 {
    splitmix64(splitmix64(seed ^ 0x243f6a8885a308d3) ^ splitmix64(id))
}
