//! Scalar abstraction shared by the transform layer.
//!
//! Grids, signals, STFTs, weights and mixed norms are written once against
//! [`Real`] and instantiated for `f32` and `f64`. The operator layer
//! (matrices, spectra, Krylov solves) is `f64` only.

use std::fmt::{Display, LowerExp};
use std::iter::Sum;

use num_complex::Complex;
use num_traits::{Float, FloatConst};
use rustfft::FftNum;
use serde::de::DeserializeOwned;
use serde::Serialize;

pub trait Real:
    Float + FloatConst + FftNum + Default + Sum + Display + LowerExp + Serialize + DeserializeOwned
{
    /// Converts an `f64` literal. Every `Real` can represent every finite `f64`
    /// up to rounding, so this never fails.
    #[inline]
    fn lit(x: f64) -> Self {
        <Self as num_traits::NumCast>::from(x).unwrap()
    }

    #[inline]
    fn count(n: usize) -> Self {
        <Self as num_traits::NumCast>::from(n).unwrap()
    }

    #[inline]
    fn to_f64_lossy(self) -> f64 {
        num_traits::ToPrimitive::to_f64(&self).unwrap_or(f64::NAN)
    }

    #[inline]
    fn two_pi() -> Self {
        Self::TAU()
    }
}

impl Real for f32 {}
impl Real for f64 {}

/// `e^{iθ}`.
#[inline]
pub fn cis<T: Real>(theta: T) -> Complex<T> {
    Complex::new(theta.cos(), theta.sin())
}

#[inline]
pub fn is_finite_c<T: Real>(z: Complex<T>) -> bool {
    z.re.is_finite() && z.im.is_finite()
}
