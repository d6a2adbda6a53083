//! Scalar abstraction shared by every numerical kernel in the crate.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FloatConst, FromPrimitive, NumAssign, ToPrimitive};

/// Floating point scalar: `f32` or `f64`.
///
/// All geometry, measures and kernels are written against this trait. The
/// crate root re-exports `f64` aliases for day-to-day use.
pub trait Real:
    Float
    + FloatConst
    + FromPrimitive
    + ToPrimitive
    + NumAssign
    + Sum
    + Default
    + Debug
    + Display
    + Send
    + Sync
    + 'static
{
    /// Converts an `f64` literal. Never fails for the two supported types.
    #[inline]
    fn of(x: f64) -> Self {
        Self::from_f64(x).expect("f64 literal representable")
    }

    #[inline]
    fn of_usize(n: usize) -> Self {
        Self::from_usize(n).expect("count representable")
    }

    #[inline]
    fn to_f64_lossy(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }

    /// Machine epsilon of the type, as an `f64`.
    fn eps_f64() -> f64 {
        Self::epsilon().to_f64_lossy()
    }

    /// `self` if `keep`, else `+0`, without a branch.
    fn masked(self, keep: bool) -> Self;
}

impl Real for f32 {
    #[inline(always)]
    fn masked(self, keep: bool) -> Self {
        f32::from_bits(self.to_bits() & (keep as u32).wrapping_neg())
    }
}

impl Real for f64 {
    #[inline(always)]
    fn masked(self, keep: bool) -> Self {
        f64::from_bits(self.to_bits() & (keep as u64).wrapping_neg())
    }
}

/// Neumaier-compensated accumulator.
///
/// Every reduction whose result is reported goes through this so the value
/// only depends on the order of `add` calls, which callers fix.
#[derive(Clone, Copy, Debug, Default)]
pub struct CompensatedSum<T> {
    sum: T,
    comp: T,
}

impl<T: Real> CompensatedSum<T> {
    pub fn new() -> Self {
        Self {
            sum: T::zero(),
            comp: T::zero(),
        }
    }

    #[inline]
    pub fn add(&mut self, x: T) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    /// Folds another accumulator in, keeping its compensation term.
    #[inline]
    pub fn merge(&mut self, other: &Self) {
        self.add(other.sum);
        self.add(other.comp);
    }

    #[inline]
    pub fn value(&self) -> T {
        self.sum + self.comp
    }
}

impl<T: Real> FromIterator<T> for CompensatedSum<T> {
    fn from_iter<I: IntoIterator<Item = T>>(iter: I) -> Self {
        let mut acc = Self::new();
        for x in iter {
            acc.add(x);
        }
        acc
    }
}

/// Compensated sum of a sequence, in iteration order.
pub fn compensated_sum<T: Real, I: IntoIterator<Item = T>>(iter: I) -> T {
    iter.into_iter().collect::<CompensatedSum<T>>().value()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn recovers_cancelled_terms() {
        let xs = [1.0e16_f64, 1.0, -1.0e16, 1.0];
        let naive: f64 = xs.iter().sum();
        assert_eq!(compensated_sum(xs), 2.0);
        assert_ne!(naive, 2.0);
    }

    #[test]
    fn merge_matches_sequential() {
        let xs: Vec<f64> = (1..1000).map(|k| 1.0 / k as f64).collect();
        let mut a: CompensatedSum<f64> = xs[..500].iter().copied().collect();
        let b: CompensatedSum<f64> = xs[500..].iter().copied().collect();
        a.merge(&b);
        assert!((a.value() - compensated_sum(xs.iter().copied())).abs() < 1e-15);
    }

    #[test]
    fn masking() {
        assert_eq!(2.5f64.masked(true), 2.5);
        assert_eq!(2.5f64.masked(false), 0.0);
        assert_eq!((-1.5f32).masked(false).to_bits(), 0);
    }

    #[test]
    fn generic_over_f32() {
        let v: f32 = compensated_sum((0..10).map(|_| 0.1_f32));
        assert!((v - 1.0).abs() < 1e-6);
    }
}
