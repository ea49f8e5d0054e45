//! Per-replication random streams.
//!
//! Every replication owns a [`CountingRng`] seeded from `(master_seed, index)`
//! through [`stream_seed`]. The generator counts the uniforms it hands out so
//! that the variate cost of a run can be reported exactly.

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// SplitMix64 finalizer.
#[inline]
pub fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Seed of replication stream `index` under `master_seed`:
/// `splitmix64(splitmix64(master_seed) ^ index)`.
pub fn stream_seed(master_seed: u64, index: u64) -> u64 {
    splitmix64(splitmix64(master_seed) ^ index)
}

#[derive(Debug, Clone)]
pub struct CountingRng {
    inner: ChaCha8Rng,
    seed: u64,
    consumed: u64,
}

impl CountingRng {
    pub fn seed_from_u64(seed: u64) -> Self {
        Self {
            inner: ChaCha8Rng::seed_from_u64(seed),
            seed,
            consumed: 0,
        }
    }

    pub fn for_replication(master_seed: u64, index: u64) -> Self {
        Self::seed_from_u64(stream_seed(master_seed, index))
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Number of uniforms drawn so far.
    pub fn consumed(&self) -> u64 {
        self.consumed
    }

    /// Uniform on the open interval (0, 1), 53 bits of resolution.
    #[inline]
    pub fn uniform(&mut self) -> f64 {
        self.consumed += 1;
        loop {
            let bits = self.inner.next_u64() >> 11;
            if bits != 0 {
                return bits as f64 * (1.0 / (1u64 << 53) as f64);
            }
        }
    }

    /// Exponential variate with the given rate, by inversion.
    #[inline]
    pub fn exponential(&mut self, rate: f64) -> f64 {
        -self.uniform().ln() / rate
    }
}
