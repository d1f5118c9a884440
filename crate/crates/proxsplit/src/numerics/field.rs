use std::fmt;

use nalgebra::ComplexField;
use num_complex::Complex64;

/// Scalar field of the ambient space: `f64` or `Complex64`.
pub trait Field:
    ComplexField<RealField = f64> + Copy + Send + Sync + fmt::Debug + fmt::Display + 'static
{
    const IS_COMPLEX: bool;

    /// Builds a scalar from real and imaginary parts. The imaginary part is
    /// dropped for the real field.
    fn from_parts(re: f64, im: f64) -> Self;

    fn re(self) -> f64 {
        self.real()
    }

    fn im(self) -> f64 {
        self.imaginary()
    }

    /// `Re(conj(self) * other)`, the real inner product of two scalars.
    fn dot_re(self, other: Self) -> f64;

    fn is_finite_scalar(self) -> bool {
        self.re().is_finite() && self.im().is_finite()
    }
}

impl Field for f64 {
    const IS_COMPLEX: bool = false;

    fn from_parts(re: f64, _im: f64) -> Self {
        re
    }

    fn dot_re(self, other: Self) -> f64 {
        self * other
    }
}

impl Field for Complex64 {
    const IS_COMPLEX: bool = true;

    fn from_parts(re: f64, im: f64) -> Self {
        Complex64::new(re, im)
    }

    fn dot_re(self, other: Self) -> f64 {
        self.re * other.re + self.im * other.im
    }
}
