//! Scalar abstraction for the amplitude type.

use std::fmt::{Debug, Display};

use num_traits::{Float, FloatConst, FromPrimitive, NumAssign};

/// Real scalar used for amplitudes and probabilities.
///
/// The tolerances are the precision-dependent thresholds every module uses:
/// `exact_tol` for "equals an exact value", `negligible` for treating a branch
/// weight as impossible, and `consistency_tol` for decoherence-functional
/// off-diagonals.
pub trait Real:
    Float + FloatConst + FromPrimitive + NumAssign + Debug + Display + Default + Send + Sync + 'static
{
    fn exact_tol() -> Self;
    fn negligible() -> Self;
    fn consistency_tol() -> Self;

    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("literal representable in scalar type")
    }

    fn to_f64_lossy(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl Real for f64 {
    fn exact_tol() -> Self {
        1e-12
    }
    fn negligible() -> Self {
        1e-14
    }
    fn consistency_tol() -> Self {
        1e-10
    }
}

impl Real for f32 {
    fn exact_tol() -> Self {
        2e-6
    }
    fn negligible() -> Self {
        1e-9
    }
    fn consistency_tol() -> Self {
        1e-5
    }
}
