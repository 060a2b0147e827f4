use std::fmt::Debug;
use std::iter::Sum;
use std::ops::{Add, AddAssign, Mul, MulAssign, Neg, Sub, SubAssign};

use num_complex::Complex64;

/// Field of values carried by a [`GridFunction`](crate::GridFunction).
///
/// Implemented for `f64` and `Complex64`; the complex case is needed for the
/// conjugated operator family `z ↦ e^{bz} T(e^{-bz} f)`.
pub trait Scalar:
    Copy
    + Debug
    + PartialEq
    + Send
    + Sync
    + Default
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Neg<Output = Self>
    + AddAssign
    + SubAssign
    + MulAssign
    + Sum
    + 'static
{
    const IS_COMPLEX: bool;

    fn zero() -> Self {
        Self::default()
    }
    fn from_real(x: f64) -> Self;
    /// Builds a value from real and imaginary parts; real scalars ignore `im`.
    fn from_parts(re: f64, im: f64) -> Self;
    fn scale(self, x: f64) -> Self;
    fn modulus(self) -> f64;
    fn exp(self) -> Self;
    fn re(self) -> f64;
    fn im(self) -> f64;
}

impl Scalar for f64 {
    const IS_COMPLEX: bool = false;

    #[inline]
    fn from_real(x: f64) -> Self {
        x
    }
    #[inline]
    fn from_parts(re: f64, _im: f64) -> Self {
        re
    }
    #[inline]
    fn scale(self, x: f64) -> Self {
        self * x
    }
    #[inline]
    fn modulus(self) -> f64 {
        self.abs()
    }
    #[inline]
    fn exp(self) -> Self {
        f64::exp(self)
    }
    #[inline]
    fn re(self) -> f64 {
        self
    }
    #[inline]
    fn im(self) -> f64 {
        0.0
    }
}

impl Scalar for Complex64 {
    const IS_COMPLEX: bool = true;

    #[inline]
    fn from_real(x: f64) -> Self {
        Complex64::new(x, 0.0)
    }
    #[inline]
    fn from_parts(re: f64, im: f64) -> Self {
        Complex64::new(re, im)
    }
    #[inline]
    fn scale(self, x: f64) -> Self {
        self * x
    }
    #[inline]
    fn modulus(self) -> f64 {
        self.norm()
    }
    #[inline]
    fn exp(self) -> Self {
        Complex64::exp(self)
    }
    #[inline]
    fn re(self) -> f64 {
        self.re
    }
    #[inline]
    fn im(self) -> f64 {
        self.im
    }
}
