//! Floating-point abstraction shared by the simulator and the learners.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use ndarray::{LinalgScalar, ScalarOperand};
use num_traits::{Float, FromPrimitive, NumAssign, ToPrimitive};

/// Real scalar usable by every numeric module: `f32` or `f64`.
pub trait Scalar:
    Float
    + FromPrimitive
    + ToPrimitive
    + NumAssign
    + LinalgScalar
    + ScalarOperand
    + Sum
    + Debug
    + Display
    + Default
    + Send
    + Sync
    + 'static
{
    /// Converts an `f64` literal. Panics only if the target type cannot
    /// represent finite `f64` values, which never happens for `f32`/`f64`.
    #[inline]
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("finite literal")
    }

    #[inline]
    fn to_f64_lossy(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }

    /// Parses the textual form written by `Display`.
    fn parse_str(s: &str) -> Option<Self>;
}

impl Scalar for f32 {
    fn parse_str(s: &str) -> Option<Self> {
        s.trim().parse().ok()
    }
}

impl Scalar for f64 {
    fn parse_str(s: &str) -> Option<Self> {
        s.trim().parse().ok()
    }
}

/// Shorthand for [`Scalar::lit`].
#[inline]
pub fn lit<S: Scalar>(x: f64) -> S {
    S::lit(x)
}
