//! Deterministic random numbers.
//!
//! Every random quantity in the crate (initial weights, datasets, path
//! samples, shuffles) is drawn from [`Prng`], a plain splitmix64 stream.
//! Uniforms take the top 53 bits; each normal consumes exactly two uniforms
//! (Box-Muller, cosine branch only) so the stream position is a simple
//! function of how many values were requested.

use core::f64::consts::PI;

use crate::math::{cos, log, sqrt};

const GOLDEN_GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Prng {
    state: u64,
}

impl Prng {
    pub fn new(seed: u64) -> Self {
        Prng { state: seed }
    }

    pub fn state(&self) -> u64 {
        self.state
    }

    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(GOLDEN_GAMMA);
        let mut z = self.state;
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^ (z >> 31)
    }

    /// Uniform on `[0, 1)` with 53 bits of resolution.
    pub fn uniform(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform on `[lo, hi)`.
    pub fn uniform_in(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.uniform()
    }

    /// Standard normal via Box-Muller on two consecutive uniforms.
    pub fn normal(&mut self) -> f64 {
        // 1 - u lies in (0, 1], so the log is finite.
        let u1 = 1.0 - self.uniform();
        let u2 = self.uniform();
        sqrt(-2.0 * log(u1)) * cos(2.0 * PI * u2)
    }

    pub fn fill_normal(&mut self, out: &mut [f64]) {
        for v in out {
            *v = self.normal();
        }
    }

    /// Uniform index in `0..n` (multiply-shift; `n` must be positive).
    pub fn below(&mut self, n: usize) -> usize {
        debug_assert!(n > 0);
        ((u128::from(self.next_u64()) * n as u128) >> 64) as usize
    }

    /// Fisher-Yates shuffle, drawing one index per position from the top down.
    pub fn shuffle<T>(&mut self, items: &mut [T]) {
        for i in (1..items.len()).rev() {
            let j = self.below(i + 1);
            items.swap(i, j);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    // Reference values from an independent Python splitmix64 implementation.
    #[test]
    fn splitmix_reference_stream() {
        let mut rng = Prng::new(1234567);
        let got: [u64; 5] = core::array::from_fn(|_| rng.next_u64());
        assert_eq!(got, SPLITMIX_1234567);
    }

    const SPLITMIX_1234567: [u64; 5] = [
        6457827717110365317,
        3203168211198807973,
        9817491932198370423,
        4593380528125082431,
        16408922859458223821,
    ];

    #[test]
    fn uniform_is_in_unit_interval() {
        let mut rng = Prng::new(0);
        for _ in 0..10_000 {
            let u = rng.uniform();
            assert!((0.0..1.0).contains(&u));
        }
    }

    #[test]
    fn normal_consumes_two_draws() {
        let mut a = Prng::new(9);
        let mut b = Prng::new(9);
        a.normal();
        b.next_u64();
        b.next_u64();
        assert_eq!(a, b);
    }

    #[test]
    fn normal_moments() {
        let mut rng = Prng::new(42);
        let n = 200_000;
        let (mut s, mut s2) = (0.0, 0.0);
        for _ in 0..n {
            let z = rng.normal();
            s += z;
            s2 += z * z;
        }
        let mean = s / n as f64;
        let var = s2 / n as f64 - mean * mean;
        // 4 sigma bands: sd(mean) = 1/sqrt(n), sd(var) ~ sqrt(2/n).
        assert!(mean.abs() < 4.0 / (n as f64).sqrt());
        assert!((var - 1.0).abs() < 4.0 * (2.0 / n as f64).sqrt());
    }

    #[test]
    fn below_stays_in_range_and_shuffle_permutes() {
        let mut rng = Prng::new(5);
        for n in 1..50 {
            assert!(rng.below(n) < n);
        }
        let mut items: [usize; 20] = core::array::from_fn(|i| i);
        rng.shuffle(&mut items);
        let mut sorted = items;
        sorted.sort_unstable();
        assert_eq!(sorted, core::array::from_fn::<usize, 20, _>(|i| i));
        assert_ne!(items, sorted);
    }
}
