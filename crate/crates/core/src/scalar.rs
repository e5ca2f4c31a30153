//! Floating point abstraction for the numeric kernels.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FromPrimitive, NumAssign, ToPrimitive};

/// Real scalar the divergence statistics and permutation engine run on.
pub trait Scalar:
    Float + NumAssign + FromPrimitive + ToPrimitive + Sum + Debug + Display + Send + Sync + 'static
{
    /// Lossless-enough conversion from `f64` for constants.
    fn of(value: f64) -> Self {
        Self::from_f64(value).expect("f64 constant representable in scalar")
    }

    /// Exact conversion from a count.
    fn of_usize(value: usize) -> Self {
        Self::from_usize(value).expect("count representable in scalar")
    }

    fn to_f64_lossy(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl Scalar for f32 {}
impl Scalar for f64 {}
