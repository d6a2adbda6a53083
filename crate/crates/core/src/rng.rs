//! Seeded random streams.
//!
//! The generator is **xoshiro256++** (Blackman and Vigna), seeded from a
//! single `u64` through **SplitMix64** exactly as `rand_xoshiro`'s
//! `seed_from_u64` does. Uniform doubles take the top 53 bits of a draw,
//! `(x >> 11) * 2^-53`, giving values in `[0, 1)`. Standard normals use the
//! basic Box–Muller transform and emit both variates of each pair in order
//! (cosine branch first). Independent substreams are produced with the
//! generator's 2^128-step jump, so worker `k` of a parallel job uses the
//! stream reached after `k` jumps.
//!
//! Any reimplementation following these four rules reproduces every sample
//! this crate draws.

use rand_core::{RngCore, SeedableRng};
use rand_xoshiro::Xoshiro256PlusPlus;

use crate::scalar::Real;

const TWO_POW_M53: f64 = 1.0 / (1u64 << 53) as f64;

#[derive(Clone, Debug)]
pub struct RngState {
    seed: u64,
    inner: Xoshiro256PlusPlus,
    spare_normal: Option<f64>,
    draws: u64,
}

impl RngState {
    pub fn new(seed: u64) -> Self {
        Self {
            seed,
            inner: Xoshiro256PlusPlus::seed_from_u64(seed),
            spare_normal: None,
            draws: 0,
        }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Number of 64-bit words consumed from this stream so far.
    pub fn position(&self) -> u64 {
        self.draws
    }

    #[inline]
    pub fn next_u64(&mut self) -> u64 {
        self.draws += 1;
        self.inner.next_u64()
    }

    /// Uniform on `[0, 1)`.
    #[inline]
    pub fn uniform(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * TWO_POW_M53
    }

    /// Uniform on `(0, 1]`, safe to take the logarithm of.
    #[inline]
    fn uniform_open0(&mut self) -> f64 {
        1.0 - self.uniform()
    }

    /// Standard normal variate via Box–Muller.
    pub fn normal(&mut self) -> f64 {
        if let Some(z) = self.spare_normal.take() {
            return z;
        }
        let u1 = self.uniform_open0();
        let u2 = self.uniform();
        let r = (-2.0 * u1.ln()).sqrt();
        let (s, c) = (2.0 * std::f64::consts::PI * u2).sin_cos();
        self.spare_normal = Some(r * s);
        r * c
    }

    pub fn normal_as<T: Real>(&mut self) -> T {
        T::of(self.normal())
    }

    pub fn uniform_as<T: Real>(&mut self) -> T {
        T::of(self.uniform())
    }

    /// Uniform integer in `0..n` by rejection (unbiased).
    pub fn below(&mut self, n: u64) -> u64 {
        assert!(n > 0);
        let zone = u64::MAX - u64::MAX % n;
        loop {
            let x = self.next_u64();
            if x < zone {
                return x % n;
            }
        }
    }

    /// Substream reached after `k` jumps from this stream's current state.
    ///
    /// Substreams are disjoint for 2^128 draws, so parallel workers can each
    /// take one without coordination.
    pub fn substream(&self, k: u64) -> RngState {
        let mut inner = self.inner.clone();
        for _ in 0..k {
            inner.jump();
        }
        RngState {
            seed: self.seed,
            inner,
            spare_normal: None,
            draws: 0,
        }
    }

    /// `count` consecutive substreams `1..=count`; index 0 is left to the
    /// parent stream.
    pub fn split(&self, count: usize) -> Vec<RngState> {
        let mut inner = self.inner.clone();
        (0..count)
            .map(|_| {
                inner.jump();
                RngState {
                    seed: self.seed,
                    inner: inner.clone(),
                    spare_normal: None,
                    draws: 0,
                }
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn same_seed_same_stream() {
        let mut a = RngState::new(42);
        let mut b = RngState::new(42);
        for _ in 0..1000 {
            assert_eq!(a.next_u64(), b.next_u64());
        }
        assert_eq!(a.position(), 1000);
    }

    #[test]
    fn pinned_first_words() {
        // xoshiro256++ seeded through SplitMix64(0); frozen so a change of
        // algorithm or seeding is caught.
        let mut r = RngState::new(0);
        let first: Vec<u64> = (0..3).map(|_| r.next_u64()).collect();
        let mut again = RngState::new(0);
        assert_eq!(first[0], again.next_u64());
        assert_eq!(first, PINNED_SEED0.to_vec());
    }

    const PINNED_SEED0: [u64; 3] = [
        0x53175d61490b23df,
        0x61da6f3dc380d507,
        0x5c0fdf91ec9a7bfc,
    ];

    #[test]
    fn uniform_in_unit_interval() {
        let mut r = RngState::new(7);
        for _ in 0..10_000 {
            let u = r.uniform();
            assert!((0.0..1.0).contains(&u));
        }
    }

    #[test]
    fn normal_moments() {
        let mut r = RngState::new(11);
        let n = 200_000;
        let xs: Vec<f64> = (0..n).map(|_| r.normal()).collect();
        let mean = xs.iter().sum::<f64>() / n as f64;
        let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n as f64;
        assert!(mean.abs() < 4.0 / (n as f64).sqrt());
        assert!((var - 1.0).abs() < 0.02);
    }

    #[test]
    fn substreams_differ_and_are_reproducible() {
        let base = RngState::new(3);
        let mut s1 = base.substream(1);
        let mut s2 = base.substream(2);
        let mut s1b = base.split(2).remove(0);
        let a = s1.next_u64();
        assert_ne!(a, s2.next_u64());
        assert_eq!(a, s1b.next_u64());
    }

    #[test]
    fn below_stays_in_range() {
        let mut r = RngState::new(5);
        let mut seen = [false; 7];
        for _ in 0..1000 {
            seen[r.below(7) as usize] = true;
        }
        assert!(seen.iter().all(|&s| s));
    }
}
