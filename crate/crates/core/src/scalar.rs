//! Floating-point scalar abstraction for amplitudes.
//!
//! Every state, transform and chi routine is generic over [`Real`], which is
//! implemented for `f32` and `f64`. The crate root exposes `f64` aliases
//! since the acceptance tolerances are only meaningful in double precision.

use std::fmt::{Debug, Display, LowerExp};

use num_complex::Complex;
use num_traits::{Float, FloatConst, FromPrimitive, NumAssign};
use rustfft::FftNum;

/// Tolerance for unitarity and normalization assertions in double precision.
pub const TOLERANCE: f64 = 1e-9;

/// Squared norm below which a state is treated as corrupted.
pub const CORRUPTION_TOLERANCE: f64 = 1e-6;

/// Real scalar type backing complex amplitudes.
pub trait Real:
    Float + FloatConst + FromPrimitive + NumAssign + FftNum + Debug + Display + LowerExp + Default
{
    /// Unitarity / normalization tolerance appropriate for this precision.
    fn tolerance() -> Self;

    fn corruption_tolerance() -> Self {
        Self::from_f64(CORRUPTION_TOLERANCE).unwrap()
    }

    fn from_count(n: usize) -> Self {
        Self::from_usize(n).unwrap()
    }

    fn lit(x: f64) -> Self {
        Self::from_f64(x).unwrap()
    }
}

impl Real for f64 {
    fn tolerance() -> Self {
        TOLERANCE
    }
}

impl Real for f32 {
    fn tolerance() -> Self {
        1e-4
    }
}

/// `exp(2*pi*i*k/m)`, with `k` reduced mod `m` before the angle is formed.
pub fn root_of_unity<T: Real>(k: u64, m: u64) -> Complex<T> {
    debug_assert!(m > 0);
    let k = k % m;
    let angle = T::TAU() * T::from_u64(k).unwrap() / T::from_u64(m).unwrap();
    Complex::from_polar(T::one(), angle)
}
