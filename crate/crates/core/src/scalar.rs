//! Scalar traits shared by the lattice layer and the numeric layers.

use std::fmt::{Debug, Display, LowerExp};
use std::iter::Sum;

use num_rational::Ratio;
use num_traits::{Float, FromPrimitive, Num, NumAssign, ToPrimitive};

/// Ordered field element usable for lattice operations.
///
/// Implemented for `f32`, `f64` and the checked rationals `Ratio<i64>` and
/// `Ratio<i128>`, so order identities can be tested in exact arithmetic.
pub trait Scalar: Num + Copy + PartialOrd + Debug + Send + Sync + 'static {
    fn finite(&self) -> bool;
    fn to_f64_lossy(&self) -> f64;
}

macro_rules! impl_scalar_float {
    ($($t:ty),*) => {$(
        impl Scalar for $t {
            #[inline]
            fn finite(&self) -> bool {
                self.is_finite()
            }
            #[inline]
            fn to_f64_lossy(&self) -> f64 {
                *self as f64
            }
        }
    )*};
}
impl_scalar_float!(f32, f64);

macro_rules! impl_scalar_ratio {
    ($($t:ty),*) => {$(
        impl Scalar for Ratio<$t> {
            #[inline]
            fn finite(&self) -> bool {
                true
            }
            fn to_f64_lossy(&self) -> f64 {
                self.to_f64().unwrap_or(f64::NAN)
            }
        }
    )*};
}
impl_scalar_ratio!(i64, i128);

/// Floating-point scalar used by functionals and solvers.
pub trait Real:
    Scalar + Float + NumAssign + FromPrimitive + Sum + Display + LowerExp + Default
{
    #[inline]
    fn c(x: f64) -> Self {
        Self::from_f64(x).unwrap()
    }
}

impl Real for f32 {}
impl Real for f64 {}

#[inline]
pub(crate) fn smin<T: Scalar>(a: T, b: T) -> T {
    if b < a {
        b
    } else {
        a
    }
}

#[inline]
pub(crate) fn smax<T: Scalar>(a: T, b: T) -> T {
    if b > a {
        b
    } else {
        a
    }
}

#[inline]
pub(crate) fn sabs<T: Scalar>(a: T) -> T {
    if a < T::zero() {
        T::zero() - a
    } else {
        a
    }
}
