//! Scalar abstraction so the whole pipeline runs in `f32` (hardware-like)
//! or `f64` (reference path for gradient checks).

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::Float;

pub trait Real: Float + Default + Debug + Display + Sum + Send + Sync + 'static {
    /// Converts an `f64` literal into this scalar type.
    fn lit(v: f64) -> Self;
    fn as_f64(self) -> f64;
}

impl Real for f32 {
    #[inline]
    fn lit(v: f64) -> Self {
        v as f32
    }
    #[inline]
    fn as_f64(self) -> f64 {
        self as f64
    }
}

impl Real for f64 {
    #[inline]
    fn lit(v: f64) -> Self {
        v
    }
    #[inline]
    fn as_f64(self) -> f64 {
        self
    }
}

/// Casts between scalar types by way of `f64`.
#[inline]
pub fn cast<A: Real, B: Real>(v: A) -> B {
    B::lit(v.as_f64())
}
