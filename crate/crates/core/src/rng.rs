//! Deterministic random source for simulation runs.
//!
//! The generator is xoshiro256++ (Blackman & Vigna) with its 256-bit state
//! filled from SplitMix64 applied to the 64-bit seed:
//!
//! ```text
//! splitmix64:  z = (x += 0x9e3779b97f4a7c15)
//!              z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9
//!              z = (z ^ (z >> 27)) * 0x94d049bb133111eb
//!              return z ^ (z >> 31)
//!
//! xoshiro256++: out = rotl(s0 + s3, 23) + s0
//!               t = s1 << 17
//!               s2 ^= s0; s3 ^= s1; s1 ^= s2; s0 ^= s3; s2 ^= t
//!               s3 = rotl(s3, 45)
//! ```
//!
//! Independent streams are obtained by applying the xoshiro256++ `jump`
//! polynomial (2^128 steps) `stream` times to the seeded state, so streams of
//! one seed never overlap.
//!
//! Derived draws are fixed here as well:
//! - `uniform()` = `(next_u64 >> 11) * 2^-53`, a value in `[0, 1)`;
//! - `below(n)` = Lemire's widening-multiply method with rejection on the
//!   low word (`lo < 2^64 mod n` is rejected), which is unbiased.

use rand_core::{Rng, SeedableRng};
use rand_xoshiro::Xoshiro256PlusPlus;

/// Stream identifiers used by a simulation run.
pub mod streams {
    pub const SHUFFLE: u32 = 0;
    pub const FORECASTER: u32 = 1;
    pub const STRATEGIES: u32 = 2;
    pub const COMBINER: u32 = 3;
    pub const SYNTHETIC: u32 = 4;
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SimRng {
    inner: Xoshiro256PlusPlus,
}

impl SimRng {
    pub fn new(seed: u64) -> Self {
        Self {
            inner: Xoshiro256PlusPlus::seed_from_u64(seed),
        }
    }

    /// Stream `stream` of `seed`: the seeded state advanced by `stream` jumps.
    pub fn stream(seed: u64, stream: u32) -> Self {
        let mut rng = Self::new(seed);
        for _ in 0..stream {
            rng.inner.jump();
        }
        rng
    }

    /// Returns a generator 2^128 steps ahead and advances `self` past it.
    pub fn split(&mut self) -> Self {
        let child = self.clone();
        self.inner.jump();
        child
    }

    pub fn next_u64(&mut self) -> u64 {
        self.inner.next_u64()
    }

    pub fn uniform(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform integer in `0..n`. Panics if `n == 0`.
    pub fn below(&mut self, n: u64) -> u64 {
        assert!(n > 0, "below(0)");
        let zone = n.wrapping_neg() % n;
        loop {
            let m = (self.next_u64() as u128) * (n as u128);
            if (m as u64) >= zone {
                return (m >> 64) as u64;
            }
        }
    }

    pub fn bernoulli(&mut self, p: f64) -> bool {
        self.uniform() < p
    }

    /// Samples an index with probability proportional to `probs`, which must
    /// be non-negative and sum to (approximately) one. The last index with a
    /// positive probability absorbs rounding slack.
    pub fn categorical(&mut self, probs: &[f64]) -> usize {
        let u = self.uniform();
        let mut acc = 0.0;
        let mut last = 0;
        for (i, &p) in probs.iter().enumerate() {
            if p <= 0.0 {
                continue;
            }
            acc += p;
            last = i;
            if u < acc {
                return i;
            }
        }
        last
    }
}
