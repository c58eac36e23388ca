//! Scalar abstraction shared by the numeric kernels (similarity, distance,
//! least squares).

use std::fmt::Debug;
use std::iter::Sum;

use num_traits::{Float, FloatConst, FromPrimitive, ToPrimitive};

/// Floating point type the numeric kernels are generic over.
pub trait Scalar:
    Float + FloatConst + FromPrimitive + ToPrimitive + Sum + Debug + Send + Sync + 'static
{
    /// Relative tolerance used for rank decisions in least squares.
    fn rank_tolerance() -> Self {
        // eps^(2/3): ~3.7e-11 for f64, ~1.4e-5 for f32
        Self::epsilon().powf(Self::from_f64(2.0 / 3.0).unwrap())
    }

    fn lit(value: f64) -> Self {
        Self::from_f64(value).expect("literal fits in scalar")
    }
}

impl Scalar for f32 {}
impl Scalar for f64 {}
