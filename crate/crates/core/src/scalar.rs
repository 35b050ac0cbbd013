//! Scalar abstraction shared by every numeric routine in the crate.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FloatConst, FromPrimitive, NumAssign, NumCast, ToPrimitive};

/// Floating point type the certification math is generic over (`f32` or `f64`).
///
/// Accuracy targets quoted in the docs (1e-12 on the normal CDF, 1e-10 on
/// Clopper-Pearson bisection) are for `f64`; `f32` instances run the same
/// algorithms at single-precision resolution.
pub trait Scalar:
    Float
    + FloatConst
    + FromPrimitive
    + NumAssign
    + Default
    + Debug
    + Display
    + Send
    + Sync
    + Sum
    + 'static
{
    /// Converts an `f64` literal. Never fails for finite inputs.
    #[inline]
    fn of(v: f64) -> Self {
        <Self as NumCast>::from(v).expect("f64 literal representable")
    }

    #[inline]
    fn as_f64(self) -> f64 {
        ToPrimitive::to_f64(&self).expect("scalar representable as f64")
    }

    /// Converts a count; exact for counts below the mantissa width.
    #[inline]
    fn of_count(v: u64) -> Self {
        <Self as NumCast>::from(v).expect("count representable")
    }

    /// Absolute tolerance for bisections that target 1e-10 in `f64`.
    #[inline]
    fn bisection_tol() -> Self {
        Self::of(1e-10).max(Self::epsilon() * Self::of(4.0))
    }
}

impl Scalar for f32 {}
impl Scalar for f64 {}

pub(crate) fn dot<S: Scalar>(a: &[S], b: &[S]) -> S {
    a.iter().zip(b).fold(S::zero(), |acc, (&x, &y)| acc + x * y)
}

pub(crate) fn norm2<S: Scalar>(a: &[S]) -> S {
    dot(a, a).sqrt()
}
