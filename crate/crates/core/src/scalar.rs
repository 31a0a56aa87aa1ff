//! Floating scalar abstraction for the mathematical kernels.

use num_traits::{Float, FromPrimitive};

/// Floating-point scalar: `f32` or `f64`.
pub trait Scalar: Float + FromPrimitive + core::fmt::Debug + 'static {
    /// Shorthand for lossy conversion of literals and small integers.
    fn of(x: f64) -> Self {
        Self::from_f64(x).expect("literal representable in scalar type")
    }
}

impl Scalar for f32 {}
impl Scalar for f64 {}
