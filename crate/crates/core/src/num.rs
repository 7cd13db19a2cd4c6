//! Scalar abstraction for the numeric kernel.
//!
//! Everything in this crate is generic over [`Real`], which is any
//! floating-point type exposing the `num-traits` `Float` interface plus
//! formatting. Concrete aliases for `f64` live at the crate root.

use std::fmt::{Debug, Display};

/// Floating-point scalar used throughout the crate: `f32` or `f64`.
pub trait Real: num_traits::Float + Debug + Display + 'static {
    /// Converts an `f64` constant into `Self`.
    ///
    /// All literal constants in the crate go through this; the conversion
    /// is lossless for f64 and rounds for f32.
    fn of(x: f64) -> Self {
        <Self as num_traits::NumCast>::from(x).expect("finite f64 constant")
    }

    /// Converts back to `f64` (used for report serialization and plotting).
    fn to_f64(self) -> f64 {
        num_traits::ToPrimitive::to_f64(&self).expect("finite scalar")
    }
}

impl Real for f32 {}
impl Real for f64 {}
