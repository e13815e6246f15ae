//! Scalar abstraction shared by the deterministic numeric kernels.

use nalgebra::RealField;
use num_traits::{FromPrimitive, ToPrimitive};

/// Floating point scalar usable by the linear algebra and quadrature kernels (f32 or f64).
pub trait Real: RealField + Copy + FromPrimitive + ToPrimitive {
    /// Relative tolerance used for symmetry checks.
    fn symmetry_tolerance() -> Self;

    #[inline]
    fn of(x: f64) -> Self {
        Self::from_f64(x).expect("f64 converts to every Real")
    }

    #[inline]
    fn f64(self) -> f64 {
        self.to_f64().expect("Real converts to f64")
    }
}

impl Real for f64 {
    fn symmetry_tolerance() -> Self {
        1e-12
    }
}

impl Real for f32 {
    fn symmetry_tolerance() -> Self {
        1e-5
    }
}
