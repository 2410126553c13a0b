//! Scalar abstraction shared by the numerical modules.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FromPrimitive, NumAssign, ToPrimitive};

/// Floating point scalar: `f32` or `f64`.
pub trait Real:
    Float + FromPrimitive + ToPrimitive + NumAssign + Sum + Default + Debug + Display + Send + Sync + 'static
{
    /// Lossy conversion from `f64`.
    fn of(v: f64) -> Self {
        Self::from_f64(v).expect("f64 is representable by every Real")
    }

    /// Widening conversion to `f64`.
    fn f64(self) -> f64 {
        self.to_f64().expect("Real always converts to f64")
    }

    /// Exact inverse of [`Real::f64`] for values that came from this type.
    fn from_bits64(bits: u64) -> Self {
        Self::of(f64::from_bits(bits))
    }

    /// Bytes used when persisting a value of this type.
    const WIDTH: u8;
}

impl Real for f32 {
    const WIDTH: u8 = 4;
}

impl Real for f64 {
    const WIDTH: u8 = 8;
}
