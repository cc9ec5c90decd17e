//! Seeded, stream-addressable random source.
//!
//! Every randomized operation draws from an [`Rng`] built from a
//! `(seed, stream_id)` pair. The generator is ChaCha8, whose output is
//! specified bit-for-bit and therefore identical across platforms.

use rand::{Rng as _, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[derive(Debug, Clone)]
pub struct Rng {
    seed: u64,
    stream_id: u64,
    inner: ChaCha8Rng,
}

impl Rng {
    pub fn new(seed: u64, stream_id: u64) -> Self {
        let mut inner = ChaCha8Rng::seed_from_u64(seed);
        inner.set_stream(stream_id);
        Self {
            seed,
            stream_id,
            inner,
        }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn stream_id(&self) -> u64 {
        self.stream_id
    }

    /// Independent child stream keyed by `index`, with the same seed.
    ///
    /// The child depends only on `(seed, stream_id, index)`, never on how many
    /// values were already drawn from `self`, so per-item streams can be handed
    /// out to parallel workers in any order.
    pub fn substream(&self, index: u64) -> Rng {
        Rng::new(self.seed, mix(self.stream_id, index))
    }

    pub fn uniform_int(&mut self, lo: usize, hi: usize) -> usize {
        debug_assert!(lo <= hi);
        self.inner.random_range(lo..=hi)
    }

    pub fn uniform_i64(&mut self, lo: i64, hi: i64) -> i64 {
        debug_assert!(lo <= hi);
        self.inner.random_range(lo..=hi)
    }

    /// Uniform draw from the closed interval `[lo, hi]`; returns `lo` when the
    /// interval is a point.
    pub fn uniform(&mut self, lo: f64, hi: f64) -> f64 {
        debug_assert!(lo <= hi);
        if lo == hi {
            return lo;
        }
        self.inner.random_range(lo..=hi)
    }

    /// Uniform draw from `[0, 1)`.
    pub fn unit(&mut self) -> f64 {
        self.inner.random::<f64>()
    }

    /// `amount` distinct indices from `0..len`, in draw order.
    pub fn sample_indices(&mut self, len: usize, amount: usize) -> Vec<usize> {
        rand::seq::index::sample(&mut self.inner, len, amount).into_vec()
    }

    pub fn sample<T, D: rand::distr::Distribution<T>>(&mut self, dist: &D) -> T {
        dist.sample(&mut self.inner)
    }

    #[cfg(test)]
    pub(crate) fn next_u64(&mut self) -> u64 {
        rand::RngCore::next_u64(&mut self.inner)
    }
}

// splitmix64 finalizer over the (stream, index) pair
fn mix(stream: u64, index: u64) -> u64 {
    let mut z = stream
        .wrapping_mul(0x9E37_79B9_7F4A_7C15)
        .wrapping_add(index)
        .wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}
