//! Counter-based random streams.
//!
//! A run seed is expanded into a ChaCha8 key (`SeedableRng::seed_from_u64`).
//! Trial `k` reads ChaCha stream `k` of that key from word position zero,
//! so every trial's draws depend only on `(seed, k)` and trials can run in
//! any order on any number of workers.

use std::f64::consts::TAU;

use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};

#[derive(Debug, Clone)]
pub struct StreamFactory {
    seed: u64,
    base: ChaCha8Rng,
}

impl StreamFactory {
    pub fn new(seed: u64) -> Self {
        Self {
            seed,
            base: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Independent stream for trial `index`.
    pub fn stream(&self, index: u64) -> TrialRng {
        let mut inner = self.base.clone();
        inner.set_stream(index);
        TrialRng { inner, spare: None }
    }
}

/// Uniform and Gaussian draws from one ChaCha stream.
#[derive(Debug, Clone)]
pub struct TrialRng {
    inner: ChaCha8Rng,
    spare: Option<f64>,
}

impl TrialRng {
    /// Uniform on `[0, 1)` with 53 random bits.
    #[inline]
    pub fn uniform(&mut self) -> f64 {
        (self.inner.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// True with probability `p`; `p = 1` is always true, `p = 0` never.
    #[inline]
    pub fn bernoulli(&mut self, p: f64) -> bool {
        self.uniform() < p
    }

    /// Standard normal by the Box-Muller transform; values come in pairs
    /// and the second one is cached.
    #[inline]
    pub fn standard_normal(&mut self) -> f64 {
        if let Some(z) = self.spare.take() {
            return z;
        }
        let u1 = 1.0 - self.uniform(); // (0, 1]
        let u2 = self.uniform();
        let r = (-2.0 * u1.ln()).sqrt();
        let (sin, cos) = (TAU * u2).sin_cos();
        self.spare = Some(r * sin);
        r * cos
    }

    #[inline]
    pub fn normal(&mut self, mean: f64, std: f64) -> f64 {
        mean + std * self.standard_normal()
    }
}
