//! Floating-point abstraction shared by the numerical modules.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FloatConst, FromPrimitive, ToPrimitive};

/// Real scalar the kernel, estimator and theory code is written against.
///
/// Implemented for `f32` and `f64`. The experiment harness and the
/// eigenvalue diagnostics run in `f64` only: Dirichlet kernels at the
/// bandwidths used in sweeps need double-precision argument reduction.
pub trait Scalar:
    Float + FloatConst + FromPrimitive + ToPrimitive + Debug + Display + Sum + Send + Sync + 'static
{
    /// Converts an `f64` literal into this scalar.
    #[inline]
    fn lit(v: f64) -> Self {
        Self::from_f64(v).expect("f64 literal representable")
    }

    /// Converts a count into this scalar.
    #[inline]
    fn from_count(v: u64) -> Self {
        Self::from_u64(v).expect("count representable")
    }

    #[inline]
    fn as_f64(self) -> f64 {
        self.to_f64().expect("finite scalar")
    }
}

impl Scalar for f32 {}
impl Scalar for f64 {}
