//! Seeded pseudo-random numbers.
//!
//! All randomness in the crate goes through [`Prng`], which is
//! xoshiro256++ seeded by expanding a `u64` with SplitMix64 (the reference
//! seeding procedure). Floats are drawn as `(next_u64() >> 11) * 2^-53`, so
//! the stream is reproducible from the documented algorithms alone, in any
//! language.
//!
//! Independent streams are derived with [`Prng::split`], which mixes a stream
//! index into the seed instead of sharing state.

use rand_core::{RngCore, SeedableRng};
use rand_xoshiro::Xoshiro256PlusPlus;

#[derive(Debug, Clone)]
pub struct Prng {
    seed: u64,
    inner: Xoshiro256PlusPlus,
}

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;

fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

impl Prng {
    pub fn new(seed: u64) -> Self {
        Prng { seed, inner: Xoshiro256PlusPlus::seed_from_u64(seed) }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Generator for sub-stream `stream`; depends only on the original seed.
    pub fn split(&self, stream: u64) -> Prng {
        Prng::new(mix64(self.seed ^ mix64(stream.wrapping_add(1).wrapping_mul(GOLDEN))))
    }

    pub fn next_u64(&mut self) -> u64 {
        self.inner.next_u64()
    }

    /// Uniform in `[0, 1)`.
    pub fn unit(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform in `[lo, hi)`.
    pub fn uniform(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.unit()
    }

    /// Uniform integer in `0..n` (`n > 0`), by Lemire's multiply-shift
    /// with rejection.
    pub fn below(&mut self, n: u64) -> u64 {
        assert!(n > 0);
        let threshold = n.wrapping_neg() % n;
        loop {
            let m = (self.next_u64() as u128) * (n as u128);
            if (m as u64) >= threshold {
                return (m >> 64) as u64;
            }
        }
    }

    pub fn index(&mut self, n: usize) -> usize {
        self.below(n as u64) as usize
    }

    pub fn chance(&mut self, p: f64) -> bool {
        self.unit() < p
    }
}
