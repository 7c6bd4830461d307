use super::fnv1a;

/// Seeded counter-based generator (SplitMix64).
///
/// The state advances by a fixed odd constant and the output is a bijective
/// mix of the counter, so the stream is a pure function of `(seed, draw
/// index)` and identical on every platform. All randomness in the engine
/// flows from one root seed, forked per purpose with [`Rng::fork`] so each
/// component's stream can be reproduced in isolation.
#[derive(Clone, Debug)]
pub struct Rng {
    state: u64,
}

const GAMMA: u64 = 0x9e3779b97f4a7c15;

impl Rng {
    pub fn new(seed: u64) -> Self {
        Rng { state: seed }
    }

    /// Derives an independent child stream named by `purpose`.
    pub fn fork(&self, purpose: &str) -> Rng {
        let mut h = fnv1a(purpose.as_bytes());
        h ^= self.state;
        // one mixing round so fork("a").fork("b") != fork("b").fork("a")
        Rng {
            state: mix(h.wrapping_add(GAMMA)),
        }
    }

    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(GAMMA);
        mix(self.state)
    }

    /// Uniform draw in [0, 1) with 53 bits of precision.
    pub fn next_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    pub fn uniform(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.next_f64()
    }

    /// Uniform index in [0, n). Panics if `n == 0`.
    pub fn below(&mut self, n: usize) -> usize {
        assert!(n > 0, "below(0)");
        ((self.next_u64() as u128 * n as u128) >> 64) as usize
    }

    /// In-place Fisher-Yates shuffle.
    pub fn shuffle<T>(&mut self, xs: &mut [T]) {
        for i in (1..xs.len()).rev() {
            let j = self.below(i + 1);
            xs.swap(i, j);
        }
    }

    /// Samples `k` distinct indices from [0, n), in draw order.
    pub fn sample_indices(&mut self, n: usize, k: usize) -> alloc::vec::Vec<usize> {
        let mut pool: alloc::vec::Vec<usize> = (0..n).collect();
        self.shuffle(&mut pool);
        pool.truncate(k.min(n));
        pool
    }
}

fn mix(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
    z ^ (z >> 31)
}
