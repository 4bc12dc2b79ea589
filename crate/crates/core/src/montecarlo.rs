//! Deterministic parallel Monte Carlo.
//!
//! Work is cut into fixed-size chunks and chunk `c` always draws from
//! stream `stream_base + c` of the run's seed. Results are therefore
//! bit-identical for any thread count.

use rayon::prelude::*;

use crate::rng::RandomStream;

/// Default trajectories per chunk.
pub const CHUNK: usize = 4096;

#[derive(Debug, Clone, Copy)]
pub struct MonteCarlo {
    pub seed: u64,
    pub stream_base: u64,
    pub chunk: usize,
}

impl MonteCarlo {
    pub fn new(seed: u64) -> Self {
        Self {
            seed,
            stream_base: 0,
            chunk: CHUNK,
        }
    }

    /// Same seed, disjoint stream range. Used to give independent
    /// experiments within one run their own randomness.
    pub fn with_stream_base(mut self, base: u64) -> Self {
        self.stream_base = base;
        self
    }

    /// Runs `f` once per sample, in parallel, returning results in sample
    /// order.
    pub fn run<T, F>(&self, samples: usize, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(&mut RandomStream) -> T + Sync,
    {
        let chunks = samples.div_ceil(self.chunk);
        (0..chunks)
            .into_par_iter()
            .flat_map_iter(|c| {
                let mut rng = RandomStream::new(self.seed, self.stream_base + c as u64);
                let len = self.chunk.min(samples - c * self.chunk);
                (0..len).map(|_| f(&mut rng)).collect::<Vec<_>>()
            })
            .collect()
    }

    /// Folds per-chunk accumulators and merges them in chunk order.
    pub fn fold<A, F, M>(&self, samples: usize, init: impl Fn() -> A + Sync, f: F, merge: M) -> A
    where
        A: Send,
        F: Fn(&mut A, &mut RandomStream) + Sync,
        M: Fn(A, A) -> A,
    {
        let chunks = samples.div_ceil(self.chunk);
        let parts: Vec<A> = (0..chunks)
            .into_par_iter()
            .map(|c| {
                let mut rng = RandomStream::new(self.seed, self.stream_base + c as u64);
                let len = self.chunk.min(samples - c * self.chunk);
                let mut acc = init();
                for _ in 0..len {
                    f(&mut acc, &mut rng);
                }
                acc
            })
            .collect();
        parts.into_iter().fold(init(), merge)
    }
}

/// Runs `f` inside a rayon pool with `threads` workers (0 = rayon default).
pub fn with_threads<R: Send>(threads: usize, f: impl FnOnce() -> R + Send) -> R {
    if threads == 0 {
        return f();
    }
    match rayon::ThreadPoolBuilder::new().num_threads(threads).build() {
        Ok(pool) => pool.install(f),
        Err(_) => f(),
    }
}

/// Running mean and variance (Welford).
#[derive(Debug, Clone, Copy, Default)]
pub struct Moments {
    pub count: u64,
    mean: f64,
    m2: f64,
}

impl Moments {
    pub fn push(&mut self, x: f64) {
        self.count += 1;
        let d = x - self.mean;
        self.mean += d / self.count as f64;
        self.m2 += d * (x - self.mean);
    }

    pub fn merge(self, other: Moments) -> Moments {
        if self.count == 0 {
            return other;
        }
        if other.count == 0 {
            return self;
        }
        let count = self.count + other.count;
        let d = other.mean - self.mean;
        let mean = self.mean + d * other.count as f64 / count as f64;
        let m2 = self.m2 + other.m2 + d * d * (self.count as f64 * other.count as f64) / count as f64;
        Moments { count, mean, m2 }
    }

    pub fn mean(&self) -> f64 {
        self.mean
    }

    /// Unbiased sample variance.
    pub fn variance(&self) -> f64 {
        if self.count < 2 {
            0.0
        } else {
            self.m2 / (self.count - 1) as f64
        }
    }

    pub fn std_error(&self) -> f64 {
        (self.variance() / self.count as f64).sqrt()
    }
}
