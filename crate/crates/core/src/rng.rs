//! Seeded, splittable random streams.
//!
//! A [`RandomStream`] is a ChaCha8 generator keyed by a 64-bit seed and a
//! 64-bit stream index. ChaCha's stream parameter gives non-overlapping
//! keystreams for distinct indices under the same seed, so parallel workers
//! each take their own index and results do not depend on thread count.

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[derive(Debug, Clone)]
pub struct RandomStream {
    seed: u64,
    stream: u64,
    rng: ChaCha8Rng,
}

impl RandomStream {
    pub fn new(seed: u64, stream: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(stream);
        Self { seed, stream, rng }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn stream(&self) -> u64 {
        self.stream
    }

    /// A fresh stream with the same seed and a different index.
    pub fn fork(&self, stream: u64) -> Self {
        Self::new(self.seed, stream)
    }

    /// Uniform on `[0, 1)`.
    pub fn uniform(&mut self) -> f64 {
        self.rng.random::<f64>()
    }

    /// Uniform on `{1, ..., n}`.
    pub fn index(&mut self, n: usize) -> usize {
        debug_assert!(n >= 1);
        self.rng.random_range(1..=n)
    }

    pub fn bernoulli(&mut self, p: f64) -> bool {
        if p >= 1.0 {
            return true;
        }
        if p <= 0.0 {
            return false;
        }
        self.uniform() < p
    }
}

impl RngCore for RandomStream {
    fn next_u32(&mut self) -> u32 {
        self.rng.next_u32()
    }

    fn next_u64(&mut self) -> u64 {
        self.rng.next_u64()
    }

    fn fill_bytes(&mut self, dst: &mut [u8]) {
        self.rng.fill_bytes(dst)
    }
}
