//! Scalar abstraction shared by every numeric routine in the crate.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FromPrimitive, ToPrimitive};

/// Floating point type the estimators are written against (`f32` or `f64`).
pub trait Real:
    Float + FromPrimitive + ToPrimitive + Sum + Debug + Display + Default + Send + Sync + 'static
{
    /// Converts an `f64` literal into `Self`.
    #[inline]
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("f64 literal representable in target float type")
    }

    /// Lossy conversion to `f64`, used for reporting and order statistics.
    #[inline]
    fn as_f64(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }

    /// Converts a count into `Self`.
    #[inline]
    fn count(n: usize) -> Self {
        Self::from_usize(n).expect("count representable in target float type")
    }
}

impl Real for f32 {}
impl Real for f64 {}

/// Arithmetic mean; zero for an empty slice.
pub fn mean<F: Real>(xs: &[F]) -> F {
    if xs.is_empty() {
        return F::zero();
    }
    xs.iter().copied().sum::<F>() / F::count(xs.len())
}

/// Unbiased sample variance (divisor `n - 1`); zero when fewer than two values.
pub fn sample_variance<F: Real>(xs: &[F]) -> F {
    if xs.len() < 2 {
        return F::zero();
    }
    let m = mean(xs);
    let ss: F = xs.iter().map(|&x| (x - m) * (x - m)).sum();
    ss / F::count(xs.len() - 1)
}

/// Returns `xs` shifted to have zero mean.
pub fn centered<F: Real>(xs: &[F]) -> Vec<F> {
    let m = mean(xs);
    xs.iter().map(|&x| x - m).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn moments_of_small_samples() {
        assert_eq!(mean::<f64>(&[]), 0.0);
        assert_eq!(mean(&[1.0f64, 2.0, 3.0]), 2.0);
        assert_eq!(sample_variance(&[1.0f64, 2.0, 3.0]), 1.0);
        assert_eq!(sample_variance(&[4.0f32]), 0.0);
        let c = centered(&[1.0f64, 2.0, 6.0]);
        assert!(mean(&c).abs() < 1e-15);
    }
}
