//! Floating-point scalar abstraction shared by every module.

use std::fmt::{Debug, Display, LowerExp};
use std::iter::Sum;
use std::ops::{AddAssign, DivAssign, MulAssign, SubAssign};
use std::str::FromStr;

use num_complex::Complex;
use num_traits::{Float, FloatConst, FromPrimitive, ToPrimitive};

/// Real scalar type the toolkit is generic over (`f32` or `f64`).
///
/// Everything in the crate is computed in `T` and `Complex<T>`. Tolerances
/// that are stated for double precision are widened to a multiple of
/// machine epsilon when `T` is coarser, see [`Scalar::tol`].
pub trait Scalar:
    Float
    + FloatConst
    + FromPrimitive
    + ToPrimitive
    + Debug
    + Display
    + LowerExp
    + FromStr
    + Default
    + Sum
    + AddAssign
    + SubAssign
    + MulAssign
    + DivAssign
    + Send
    + Sync
    + 'static
{
    /// Lossy conversion from an `f64` literal.
    #[inline]
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("f64 literal representable")
    }

    /// Conversion from a count.
    #[inline]
    fn from_count(n: usize) -> Self {
        Self::from_usize(n).expect("count representable")
    }

    /// A double-precision tolerance, never tighter than `4096·eps` of `Self`.
    #[inline]
    fn tol(f64_value: f64) -> Self {
        let floor = Self::epsilon() * Self::lit(4096.0);
        Self::lit(f64_value).max(floor)
    }

    #[inline]
    fn as_f64(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl Scalar for f32 {}
impl Scalar for f64 {}

/// Complex number over a [`Scalar`].
pub type C<T> = Complex<T>;

/// Sum in a fixed binary-tree order.
///
/// The result only depends on the input order, never on how the values were
/// produced, which keeps parallel map + sequential reduce bit-reproducible.
/// Summing `2^k` identical values is exact.
pub fn pairwise_sum<T: Scalar>(values: &[T]) -> T {
    const LEAF: usize = 8;
    match values.len() {
        0 => T::zero(),
        n if n <= LEAF => {
            // pair up leaves so powers of two stay exact
            if n.is_power_of_two() {
                let mut buf = [T::zero(); LEAF];
                buf[..n].copy_from_slice(values);
                let mut width = n;
                while width > 1 {
                    for i in 0..width / 2 {
                        buf[i] = buf[2 * i] + buf[2 * i + 1];
                    }
                    width /= 2;
                }
                buf[0]
            } else {
                values.iter().fold(T::zero(), |acc, &v| acc + v)
            }
        }
        n => {
            // largest power of two strictly below n
            let mid = if n.is_power_of_two() {
                n / 2
            } else {
                1usize << (usize::BITS - 1 - n.leading_zeros())
            };
            pairwise_sum(&values[..mid]) + pairwise_sum(&values[mid..])
        }
    }
}

/// Pairwise sum of complex values.
pub fn pairwise_sum_c<T: Scalar>(values: &[C<T>]) -> C<T> {
    let re: Vec<T> = values.iter().map(|z| z.re).collect();
    let im: Vec<T> = values.iter().map(|z| z.im).collect();
    C::new(pairwise_sum(&re), pairwise_sum(&im))
}

/// Euclidean norm of a complex vector.
pub fn euclid<T: Scalar>(v: &[C<T>]) -> T {
    v.iter().map(|z| z.norm_sqr()).fold(T::zero(), |a, b| a + b).sqrt()
}

/// Maximum of a slice, `-inf` when empty. NaN propagates.
pub fn max_of<T: Scalar>(values: &[T]) -> T {
    values.iter().fold(T::neg_infinity(), |acc, &v| {
        if v.is_nan() || acc.is_nan() {
            T::nan()
        } else {
            acc.max(v)
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pairwise_powers_of_two_are_exact() {
        for k in 0..12 {
            let n = 1usize << k;
            let v = vec![0.1f64; n];
            assert_eq!(pairwise_sum(&v) / n as f64, 0.1);
        }
    }

    #[test]
    fn pairwise_matches_naive_sum() {
        let v: Vec<f64> = (0..1037).map(|i| (i as f64).sin()).collect();
        let naive: f64 = v.iter().sum();
        assert!((pairwise_sum(&v) - naive).abs() < 1e-11);
        assert_eq!(pairwise_sum::<f64>(&[]), 0.0);
        assert_eq!(pairwise_sum(&[3.0f64]), 3.0);
        assert_eq!(pairwise_sum(&[1.0f64, 2.0, 3.0]), 6.0);
    }

    #[test]
    fn tolerance_floor_for_single_precision() {
        assert_eq!(f64::tol(1e-12), 1e-12);
        assert!(f32::tol(1e-12) > 1e-5);
    }
}
