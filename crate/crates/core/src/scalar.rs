//! Scalar abstraction shared by every geometric and metric computation.

use std::fmt::{Debug, Display};

use num_traits::{Float, FloatConst, FromPrimitive};

/// Floating point type the evaluation pipeline can run on.
///
/// Implemented for `f32` and `f64`. Everything that reads or writes files
/// works in `f64`; the core math is generic so single precision can be used
/// for memory-bound batch runs.
pub trait Scalar:
    Float + FloatConst + FromPrimitive + rstar::RTreeNum + Debug + Display + Default + Send + Sync + 'static
{
    /// Absolute distance below which two points are treated as coincident and
    /// a point is treated as lying on a polygon edge.
    fn tolerance() -> Self;

    /// Converts an `f64` literal. Panics only for values the type cannot hold
    /// at all, which never happens for finite literals.
    #[inline]
    fn of(v: f64) -> Self {
        Self::from_f64(v).expect("finite f64 literal")
    }

    #[inline]
    fn to_f64_lossy(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl Scalar for f64 {
    #[inline]
    fn tolerance() -> Self {
        1e-9
    }
}

impl Scalar for f32 {
    #[inline]
    fn tolerance() -> Self {
        1e-4
    }
}
