//! SplitMix64, a small portable 64-bit generator.
//!
//! The exact output stream is part of the scenario format: a scenario file
//! plus a topology reproduces the same tenant networks in any language that
//! implements the three steps below.
//!
//! * state advances by `0x9E3779B97F4A7C15` (wrapping);
//! * output is the state mixed with shifts 30/27/31 and multipliers
//!   `0xBF58476D1CE4E5B9`, `0x94D049BB133111EB`;
//! * bounded draws use rejection: accept `x < bound * floor((2^64 - 1) / bound)`
//!   and return `x % bound`.

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SplitMix64 {
    state: u64,
}

impl SplitMix64 {
    pub fn new(seed: u64) -> Self {
        SplitMix64 { state: seed }
    }

    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(0x9E37_79B9_7F4A_7C15);
        let mut z = self.state;
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^ (z >> 31)
    }

    /// Uniform integer in `0..bound`. Panics if `bound == 0`.
    pub fn below(&mut self, bound: u64) -> u64 {
        assert!(bound > 0, "empty range");
        let zone = (u64::MAX / bound) * bound;
        loop {
            let x = self.next_u64();
            if x < zone {
                return x % bound;
            }
        }
    }

    /// Uniform integer in the inclusive range `lo..=hi`.
    pub fn between(&mut self, lo: usize, hi: usize) -> usize {
        assert!(lo <= hi);
        lo + self.below((hi - lo) as u64 + 1) as usize
    }

    /// `k` distinct values from `0..n`, uniformly, returned sorted.
    ///
    /// Uses a partial Fisher-Yates shuffle of `0..n`: for `i` in `0..k`,
    /// swap position `i` with `i + below(n - i)`.
    pub fn sample_without_replacement(&mut self, n: usize, k: usize) -> Vec<usize> {
        assert!(k <= n, "cannot draw {k} of {n}");
        let mut pool: Vec<usize> = (0..n).collect();
        for i in 0..k {
            let j = i + self.below((n - i) as u64) as usize;
            pool.swap(i, j);
        }
        pool.truncate(k);
        pool.sort_unstable();
        pool
    }
}
