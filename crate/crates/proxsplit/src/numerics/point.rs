use std::fmt;

use nalgebra::DVector;

use super::{DenseHermitian, Field};

/// How a point is laid out; operator parameters use this to validate shapes.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Layout {
    Vector(usize),
    Matrix(usize),
}

/// An element of the real Hilbert space the splitting schemes iterate in.
pub trait Point: Clone + fmt::Debug + Send + Sync + 'static {
    fn zeros_like(&self) -> Self;

    fn inner(&self, other: &Self) -> f64;

    fn norm_sq(&self) -> f64 {
        self.inner(self)
    }

    fn norm(&self) -> f64 {
        self.norm_sq().sqrt()
    }

    fn plus(&self, other: &Self) -> Self;

    fn minus(&self, other: &Self) -> Self;

    fn scaled(&self, c: f64) -> Self;

    /// `a * self + b * other`.
    fn lin_comb(&self, a: f64, other: &Self, b: f64) -> Self;

    fn entry_count(&self) -> usize;

    fn layout(&self) -> Layout;

    fn is_finite(&self) -> bool;

    /// Multiplies entry `(i, j)` by `w(i, j)`; vectors pass `(i, i)`.
    fn weighted(&self, w: &dyn Fn(usize, usize) -> f64) -> Self;
}

impl<T: Field> Point for DenseHermitian<T> {
    fn zeros_like(&self) -> Self {
        DenseHermitian::zeros(self.dim())
    }

    fn inner(&self, other: &Self) -> f64 {
        DenseHermitian::inner(self, other)
    }

    fn norm_sq(&self) -> f64 {
        DenseHermitian::norm_sq(self)
    }

    fn plus(&self, other: &Self) -> Self {
        DenseHermitian::plus(self, other)
    }

    fn minus(&self, other: &Self) -> Self {
        DenseHermitian::minus(self, other)
    }

    fn scaled(&self, c: f64) -> Self {
        DenseHermitian::scaled(self, c)
    }

    fn lin_comb(&self, a: f64, other: &Self, b: f64) -> Self {
        DenseHermitian::lin_comb(self, a, other, b)
    }

    fn entry_count(&self) -> usize {
        self.dim() * self.dim()
    }

    fn layout(&self) -> Layout {
        Layout::Matrix(self.dim())
    }

    fn is_finite(&self) -> bool {
        DenseHermitian::is_finite(self)
    }

    fn weighted(&self, w: &dyn Fn(usize, usize) -> f64) -> Self {
        DenseHermitian::weighted(self, w)
    }
}

impl<T: Field> Point for DVector<T> {
    fn zeros_like(&self) -> Self {
        DVector::zeros(self.len())
    }

    fn inner(&self, other: &Self) -> f64 {
        self.iter().zip(other.iter()).map(|(a, b)| a.dot_re(*b)).sum()
    }

    fn plus(&self, other: &Self) -> Self {
        self + other
    }

    fn minus(&self, other: &Self) -> Self {
        self - other
    }

    fn scaled(&self, c: f64) -> Self {
        self.map(|x| x.scale(c))
    }

    fn lin_comb(&self, a: f64, other: &Self, b: f64) -> Self {
        self.zip_map(other, |x, y| x.scale(a) + y.scale(b))
    }

    fn entry_count(&self) -> usize {
        self.len()
    }

    fn layout(&self) -> Layout {
        Layout::Vector(self.len())
    }

    fn is_finite(&self) -> bool {
        self.iter().all(|x| x.is_finite_scalar())
    }

    fn weighted(&self, w: &dyn Fn(usize, usize) -> f64) -> Self {
        DVector::from_fn(self.len(), |i, _| self[i].scale(w(i, i)))
    }
}
