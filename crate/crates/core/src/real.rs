//! Scalar abstraction for the numeric core.
//!
//! Geometry, kernel, and acquisition math are written against [`Real`] so the
//! same code runs at `f32`, `f64`, or any other IEEE float. The domain layer
//! pins everything to [`crate::Scalar`].

use std::fmt::Debug;
use std::iter::Sum;

use num_traits::{Float, FromPrimitive, ToPrimitive};

/// Trait alias for the scalar type of the numeric core.
pub trait Real: Float + FromPrimitive + ToPrimitive + Sum + Debug + Default + 'static {}

impl<T> Real for T where T: Float + FromPrimitive + ToPrimitive + Sum + Debug + Default + 'static {}

/// Converts an `f64` literal into the working scalar type.
#[inline]
pub fn lit<R: Real>(x: f64) -> R {
    R::from_f64(x).expect("literal not representable in scalar type")
}
