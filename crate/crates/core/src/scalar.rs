//! Scalar abstraction shared by the geometry and operator code.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FloatConst, FromPrimitive, NumAssign, ToPrimitive};
use serde::de::DeserializeOwned;
use serde::Serialize;

/// Real floating point scalar: `f32` or `f64`.
///
/// The associated tolerances are the numerical thresholds used by the
/// sphere and operator code. They are tight for `f64` and relaxed to what
/// single precision can actually resolve for `f32`.
pub trait Real:
    Float
    + FloatConst
    + FromPrimitive
    + ToPrimitive
    + NumAssign
    + Sum
    + Default
    + Debug
    + Display
    + std::fmt::LowerExp
    + Send
    + Sync
    + Serialize
    + DeserializeOwned
    + 'static
{
    /// Threshold on `sin(angle)` below which two points count as identical
    /// or antipodal, and the drop tolerance for Gram-Schmidt residuals.
    const SNAP: f64;
    /// Allowed deviation of a sphere point's norm from one.
    const UNIT: f64;
    /// Stopping tolerance on the Riemannian gradient norm of the Karcher iteration.
    const GRAD: f64;

    /// Lossy conversion from an `f64` constant.
    #[inline]
    fn c(value: f64) -> Self {
        Self::from_f64(value).expect("f64 constant representable")
    }

    /// Lossy conversion to `f64`.
    #[inline]
    fn f64(self) -> f64 {
        self.to_f64().expect("finite scalar")
    }

    #[inline]
    fn snap() -> Self {
        Self::c(Self::SNAP)
    }

    #[inline]
    fn unit_tol() -> Self {
        Self::c(Self::UNIT)
    }

    #[inline]
    fn grad_tol() -> Self {
        Self::c(Self::GRAD)
    }
}

impl Real for f64 {
    const SNAP: f64 = 1e-12;
    const UNIT: f64 = 1e-9;
    const GRAD: f64 = 1e-10;
}

impl Real for f32 {
    const SNAP: f64 = 1e-6;
    const UNIT: f64 = 1e-5;
    const GRAD: f64 = 1e-5;
}
