//! Scalar abstraction: every numeric routine in this crate is generic over a
//! floating-point type. `f64` is the intended production type; `f32` works for
//! quick experiments at reduced tolerances.

use std::fmt::{Debug, Display};
use std::iter::Sum;
use std::ops::{AddAssign, DivAssign, MulAssign, SubAssign};

use num_traits::{Float, FromPrimitive};

/// Floating-point scalar usable by the kernel and spline machinery.
pub trait Scalar:
    Float
    + FromPrimitive
    + AddAssign
    + SubAssign
    + MulAssign
    + DivAssign
    + Sum<Self>
    + Debug
    + Display
    + 'static
{
}

impl<T> Scalar for T where
    T: Float
        + FromPrimitive
        + AddAssign
        + SubAssign
        + MulAssign
        + DivAssign
        + Sum<Self>
        + Debug
        + Display
        + 'static
{
}

/// Convert an `f64` constant into the working scalar type.
///
/// Panics only if the target type cannot represent any `f64` at all, which
/// does not happen for the supported float types.
#[inline]
pub fn cast<T: Scalar>(x: f64) -> T {
    T::from_f64(x).expect("f64 constant must be representable in the scalar type")
}

/// Lossy view of a scalar as `f64`, used for diagnostics and error payloads.
#[inline]
pub fn to_f64<T: Scalar>(x: T) -> f64 {
    x.to_f64().unwrap_or(f64::NAN)
}
