//! Scalar abstraction for the closed-form physics.
//!
//! Every analytic formula in this crate (reflectivity, visibility,
//! distinguishability, interval classification, fringe model) is generic over
//! [`Real`] so it can be evaluated at `f32` or `f64`. The crate root exports
//! `f64` aliases for the common case; the stochastic engine and the on-disk
//! formats are pinned to `f64` so event logs replay bit-exactly.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FloatConst, FromPrimitive, NumAssignOps};

/// Floating-point scalar usable in the analytic formulas (`f32` or `f64`).
pub trait Real:
    Float + FloatConst + FromPrimitive + NumAssignOps + Sum + Debug + Display + 'static
{
}

impl<T> Real for T where
    T: Float + FloatConst + FromPrimitive + NumAssignOps + Sum + Debug + Display + 'static
{
}

/// Shorthand for lifting an `f64` literal into a generic scalar.
#[inline]
pub fn real<R: Real>(x: f64) -> R {
    R::from_f64(x).expect("f64 literal must be representable in the target scalar")
}
