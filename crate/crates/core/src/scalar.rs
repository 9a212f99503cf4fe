//! Numeric traits the library is generic over.
//!
//! [`Scalar`] is the ordered-field bound used by ingestion, energies, communities and the
//! possibility transform, so those paths also run on exact rationals. [`Real`] adds the
//! floating point operations the eigen solver needs.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_rational::Ratio;
use num_traits::{Float, FromPrimitive, Num, NumAssign, Signed, ToPrimitive};

/// Ordered field element: `f32`, `f64` or an exact rational.
pub trait Scalar:
    Num + NumAssign + Signed + PartialOrd + Copy + Debug + Display + FromPrimitive + ToPrimitive + Sum + Send + Sync
{
    /// Exact `numer / denom`. Panics if `denom` is zero.
    fn ratio(numer: usize, denom: usize) -> Self {
        assert!(denom != 0, "zero denominator");
        Self::from_count(numer) / Self::from_count(denom)
    }

    fn from_count(n: usize) -> Self {
        Self::from_usize(n).expect("count representable in scalar type")
    }

    /// Nearest representable value of a floating point constant (tolerances, thresholds).
    fn from_f64_lossy(v: f64) -> Self {
        Self::from_f64(v).expect("finite constant")
    }

    fn to_f64_lossy(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }

    /// Larger of two values under `PartialOrd`; `self` wins ties and incomparable pairs.
    fn max_of(self, other: Self) -> Self {
        if other > self {
            other
        } else {
            self
        }
    }

    fn min_of(self, other: Self) -> Self {
        if other < self {
            other
        } else {
            self
        }
    }
}

impl Scalar for f32 {}
impl Scalar for f64 {}
impl Scalar for Ratio<i64> {}

/// Floating point scalar, required by the eigen decomposition.
pub trait Real: Scalar + Float {}

impl Real for f32 {}
impl Real for f64 {}
