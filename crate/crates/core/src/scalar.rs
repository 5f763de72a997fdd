//! Scalar abstraction shared by every solver module.

use std::fmt::{Debug, Display};

use num_traits::{Float, FloatConst, FromPrimitive, ToPrimitive};
use serde::de::DeserializeOwned;
use serde::Serialize;

/// Floating point type the geometry and solvers are written against.
///
/// Implemented for `f32` and `f64`. All tolerances in the crate are
/// expressed in `f64` and converted with [`Real::lit`].
pub trait Real:
    Float
    + FloatConst
    + FromPrimitive
    + ToPrimitive
    + Debug
    + Display
    + Default
    + Send
    + Sync
    + Serialize
    + DeserializeOwned
    + 'static
{
    /// Converts an `f64` literal into this type.
    #[inline]
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("finite literal")
    }

    #[inline]
    fn to_f64_lossy(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }

    #[inline]
    fn two_pi() -> Self {
        Self::TAU()
    }
}

impl Real for f32 {}
impl Real for f64 {}

/// Wraps an angle into `[0, 2π)`.
pub fn wrap_angle<T: Real>(a: T) -> T {
    let tau = T::two_pi();
    let mut r = a % tau;
    if r < T::zero() {
        r = r + tau;
    }
    // `-tiny % tau + tau` may round up to exactly tau
    if r >= tau {
        r = T::zero();
    }
    r
}
