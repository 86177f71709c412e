//! Deterministic pseudo-random numbers shared by every stochastic step.
//!
//! The generator is SplitMix64 used in counter mode: draw `n` of a stream
//! seeded with `s` is
//!
//! ```text
//! z = s + (n + 1) * 0x9E3779B97F4A7C15          (wrapping u64 arithmetic)
//! z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9
//! z = (z ^ (z >> 27)) * 0x94D049BB133111EB
//! out = z ^ (z >> 31)
//! ```
//!
//! Derived quantities:
//! - `next_f64`: `(out >> 11) * 2^-53`, uniform in `[0, 1)`.
//! - `below(n)`: `out % n` (the modulo bias is below 2^-40 for every size used here).
//! - `shuffle`: Fisher–Yates from the last index down, `j = below(i + 1)`.
//! - `fork(tag)`: a new stream seeded with `mix(seed ^ mix(tag))`, so independent
//!   consumers never share draws.
//!
//! Any implementation following the above reproduces splits and initial
//! weights exactly.

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;

fn mix(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SplitMix64 {
    seed: u64,
    counter: u64,
}

impl SplitMix64 {
    pub fn new(seed: u64) -> Self {
        Self { seed, counter: 0 }
    }

    /// Independent child stream, keyed by `tag`.
    pub fn fork(&self, tag: u64) -> Self {
        Self::new(mix(self.seed ^ mix(tag.wrapping_add(GOLDEN))))
    }

    pub fn next_u64(&mut self) -> u64 {
        self.counter = self.counter.wrapping_add(1);
        mix(self.seed.wrapping_add(self.counter.wrapping_mul(GOLDEN)))
    }

    pub fn next_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    pub fn uniform(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.next_f64()
    }

    /// Standard normal draw (Box–Muller, one value per call).
    pub fn normal(&mut self) -> f64 {
        let u1 = 1.0 - self.next_f64();
        let u2 = self.next_f64();
        (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
    }

    pub fn below(&mut self, n: usize) -> usize {
        assert!(n > 0, "below(0)");
        (self.next_u64() % n as u64) as usize
    }

    pub fn shuffle<T>(&mut self, items: &mut [T]) {
        for i in (1..items.len()).rev() {
            let j = self.below(i + 1);
            items.swap(i, j);
        }
    }
}
