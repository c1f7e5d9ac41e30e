//! Counter-based reproducible random streams.
//!
//! A [`Stream`] is a 64-bit state from which child streams can be derived by
//! index. Derivation is pure hashing (splitmix64 finalizers), so any cell of
//! a parallel experiment can reconstruct its generator from the root seed and
//! its coordinates alone, independent of scheduling order or thread count.
//! Actual variates come from ChaCha12 seeded with the stream state.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha12Rng;

const GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;

/// splitmix64 finalizer: a high-quality 64-bit mixing permutation.
fn mix(mut z: u64) -> u64 {
    z ^= z >> 30;
    z = z.wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z ^= z >> 27;
    z = z.wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Stream(u64);

impl Stream {
    pub fn new(seed: u64) -> Self {
        Stream(mix(seed.wrapping_add(GAMMA)))
    }

    /// Derive the `idx`-th child stream. Children of distinct indices, and
    /// children of distinct parents, are independent for all practical
    /// purposes.
    pub fn child(&self, idx: u64) -> Self {
        Stream(mix(self.0 ^ mix(idx.wrapping_mul(GAMMA).wrapping_add(GAMMA))))
    }

    /// Convenience: descend along a path of indices.
    pub fn descend(&self, path: &[u64]) -> Self {
        let mut s = *self;
        for &i in path {
            s = s.child(i);
        }
        s
    }

    pub fn rng(&self) -> ChaCha12Rng {
        ChaCha12Rng::seed_from_u64(self.0)
    }
}
