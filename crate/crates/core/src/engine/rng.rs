//! Seeded generator for collapse draws.
//!
//! Marsaglia's xorshift128 with the 11/19/8 shift triple, seeded from a
//! 64-bit value through PCG32 expansion. Integer-only, so draws are
//! bit-identical on every platform.

use rand_core::{Rng as _, SeedableRng};
use rand_xorshift::XorShiftRng;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Rng {
    inner: XorShiftRng,
    draws: u64,
}

impl Rng {
    pub fn seeded(seed: u64) -> Rng {
        Rng {
            inner: XorShiftRng::seed_from_u64(seed),
            draws: 0,
        }
    }

    pub fn next_u64(&mut self) -> u64 {
        self.draws += 1;
        self.inner.next_u64()
    }

    /// Uniform in [0, 1) with 53 random bits.
    pub fn uniform(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Number of 64-bit draws taken so far.
    pub fn draws(&self) -> u64 {
        self.draws
    }

    /// Index `i` with probability `weights[i] / Σweights`, from a single
    /// uniform draw against the running cumulative sum. A draw landing on a
    /// boundary goes to the lower index. `None` without drawing when the
    /// weights are empty, negative, non-finite or all zero.
    pub fn weighted_index(&mut self, weights: &[f64]) -> Option<usize> {
        if weights.iter().any(|w| !w.is_finite() || *w < 0.0) {
            return None;
        }
        let total: f64 = weights.iter().sum();
        if !(total > 0.0) {
            return None;
        }
        let target = self.uniform() * total;
        let mut cum = 0.0;
        let mut last = 0;
        for (i, w) in weights.iter().enumerate() {
            if *w == 0.0 {
                continue;
            }
            cum += w;
            last = i;
            if target < cum {
                return Some(i);
            }
        }
        Some(last)
    }
}
