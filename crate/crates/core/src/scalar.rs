//! Scalar abstraction for the geometric parts of the crate.

use std::fmt::Debug;

use num_traits::{Float, FromPrimitive, ToPrimitive};

/// Floating-point type usable for screen geometry: `f32` or `f64`.
pub trait Scalar: Float + FromPrimitive + ToPrimitive + Debug + Default + Send + Sync + 'static {
    /// Converts an `f64` literal. Every literal used by this crate is representable.
    fn lit(value: f64) -> Self {
        Self::from_f64(value).expect("literal fits the scalar type")
    }

    fn as_f64(self) -> f64 {
        self.to_f64().expect("scalar converts to f64")
    }
}

impl Scalar for f32 {}
impl Scalar for f64 {}
