//! Scalar abstractions.
//!
//! Most of the crate is written against [`Real`], a floating point type
//! (`f32` or `f64`). The handful of quantities that are rational functions of
//! the radii (the Nitsche threshold, the coefficients of the radial harmonic
//! profile) only need [`Field`], which is also implemented for exact rationals.

use std::fmt::{Debug, Display};
use std::ops::Neg;

use num_bigint::BigInt;
use num_rational::{BigRational, Ratio};
use num_traits::{Float, FloatConst, FromPrimitive, Num};

/// An ordered field: enough structure to evaluate rational expressions in the
/// radii and compare the result.
pub trait Field: Num + Neg<Output = Self> + PartialOrd + Clone + Debug {
    /// Slack for `<=` comparisons between quantities of magnitude `scale`.
    /// Zero for exact types.
    fn comparison_slack(scale: &Self) -> Self;

    /// `true` when arithmetic is exact.
    fn is_exact() -> bool;

    fn two() -> Self {
        Self::one() + Self::one()
    }

    fn three() -> Self {
        Self::two() + Self::one()
    }
}

/// Floating point scalar used by the numerical parts of the crate.
pub trait Real: Field + Float + FloatConst + FromPrimitive + Copy + Display + Send + Sync + 'static {
    /// Converts an `f64` literal. Panics only if the target type cannot
    /// represent finite `f64` values, which never happens for `f32`/`f64`.
    #[inline]
    fn lit(x: f64) -> Self {
        <Self as FromPrimitive>::from_f64(x).expect("literal representable in scalar type")
    }

    #[inline]
    fn from_usize_lossy(n: usize) -> Self {
        <Self as FromPrimitive>::from_usize(n).expect("count representable in scalar type")
    }

    /// `4π`, the area of the unit sphere.
    #[inline]
    fn sphere_area() -> Self {
        Self::lit(4.0) * Self::PI()
    }
}

macro_rules! impl_float_field {
    ($($f:ty),*) => {$(
        impl Field for $f {
            #[inline]
            fn comparison_slack(scale: &Self) -> Self {
                1e-12 * scale.abs().max(1.0)
            }
            #[inline]
            fn is_exact() -> bool {
                false
            }
        }
        impl Real for $f {}
    )*};
}

impl_float_field!(f32, f64);

impl Field for Ratio<i64> {
    fn comparison_slack(_: &Self) -> Self {
        Ratio::from_integer(0)
    }
    fn is_exact() -> bool {
        true
    }
}

impl Field for BigRational {
    fn comparison_slack(_: &Self) -> Self {
        Ratio::from_integer(BigInt::from(0))
    }
    fn is_exact() -> bool {
        true
    }
}
