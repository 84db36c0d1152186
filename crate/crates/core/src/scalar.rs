use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FromPrimitive, NumAssign, ToPrimitive};

/// Floating point scalar the geometry and field code is generic over: `f32` or `f64`.
///
/// Tolerances that depend on the working precision live here so that the
/// same algorithms stay usable in single precision.
pub trait Real:
    Float + FromPrimitive + ToPrimitive + NumAssign + Sum + Default + Debug + Display + Send + Sync + 'static
{
    /// Default world-space residual for Newton inversion of a geometric map.
    fn newton_tol() -> Self;

    /// Default barycentric tolerance for "inside the reference cell" tests.
    fn inside_tol() -> Self;

    /// Converts an `f64` literal; never fails for finite input.
    #[inline]
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("finite literal")
    }

    #[inline]
    fn to_f64_lossy(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl Real for f64 {
    fn newton_tol() -> Self {
        1e-12
    }
    fn inside_tol() -> Self {
        1e-9
    }
}

impl Real for f32 {
    fn newton_tol() -> Self {
        2e-5
    }
    fn inside_tol() -> Self {
        1e-5
    }
}
