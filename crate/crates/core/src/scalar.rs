//! Scalar abstraction for the numerical core.
//!
//! Everything numeric in this crate is generic over [`Real`], so the same
//! model, solver and tracing code runs on `f32` or `f64`. Concrete type
//! aliases for both live at the crate root.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FromPrimitive, ToPrimitive};

/// Floating-point scalar the library is generic over.
pub trait Real:
    Float + FromPrimitive + ToPrimitive + Sum<Self> + Debug + Display + Default + 'static
{
}

impl<T> Real for T where
    T: Float + FromPrimitive + ToPrimitive + Sum<T> + Debug + Display + Default + 'static
{
}

/// Convert an `f64` constant into the working scalar type.
#[inline]
pub fn real<S: Real>(v: f64) -> S {
    S::from_f64(v).expect("constant must be representable in the scalar type")
}

/// `f64` view of a scalar, for reporting and serialization.
#[inline]
pub fn to_f64<S: Real>(v: S) -> f64 {
    v.to_f64().unwrap_or(f64::NAN)
}
