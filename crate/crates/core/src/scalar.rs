//! Scalar abstraction shared by every numeric module.
//!
//! All math is written against [`Real`], which is satisfied by `f32` and
//! `f64`. The solver tolerances are meaningful only in double precision;
//! single precision is supported for the channel model, metrics and the
//! heuristic, where it is useful for fast exploratory sweeps.

use nalgebra::{DMatrix, DVector, RealField};
use num_traits::{FromPrimitive, ToPrimitive};

pub use nalgebra::Complex;

/// Real floating-point scalar used throughout the crate.
pub trait Real:
    RealField + Copy + FromPrimitive + ToPrimitive + Default + Send + Sync + 'static
{
    /// Unit roundoff of the type, as `f64`.
    const UNIT_ROUNDOFF: f64;

    /// Lossy conversion from an `f64` literal.
    #[inline]
    fn lit(v: f64) -> Self {
        Self::from_f64(v).expect("f64 literal representable")
    }

    #[inline]
    fn as_f64(self) -> f64 {
        self.to_f64().expect("finite scalar")
    }
}

impl Real for f32 {
    const UNIT_ROUNDOFF: f64 = f32::EPSILON as f64;
}

impl Real for f64 {
    const UNIT_ROUNDOFF: f64 = f64::EPSILON;
}

pub type Cplx<T> = Complex<T>;
pub type CMat<T> = DMatrix<Complex<T>>;
pub type CVec<T> = DVector<Complex<T>>;
pub type RMat<T> = DMatrix<T>;
pub type RVec<T> = DVector<T>;

#[inline]
pub fn cplx<T: Real>(re: T, im: T) -> Complex<T> {
    Complex::new(re, im)
}

#[inline]
pub fn creal<T: Real>(re: T) -> Complex<T> {
    Complex::new(re, T::zero())
}

/// `r·e^{jθ}` without requiring `num_traits::Float`.
#[inline]
pub fn polar<T: Real>(r: T, theta: T) -> Complex<T> {
    Complex::new(r * theta.cos(), r * theta.sin())
}

/// Phase angle in `(-π, π]`; zero for the origin.
#[inline]
pub fn arg<T: Real>(z: Complex<T>) -> T {
    z.im.atan2(z.re)
}

/// Squared modulus.
#[inline]
pub fn abs2<T: Real>(z: Complex<T>) -> T {
    z.re * z.re + z.im * z.im
}
