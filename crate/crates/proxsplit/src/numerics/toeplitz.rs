//! Hermitian Toeplitz structure: the map `T(u)`, its adjoint and the
//! orthogonal projection `T (T*T)⁻¹ T*` onto Toeplitz matrices.

use nalgebra::DVector;

use super::{DenseHermitian, Field};
use crate::error::{Error, Result};

/// Hermitian Toeplitz matrix with first column `u`: entry `(j, k)` is
/// `u[j − k]` below the diagonal and `conj(u[k − j])` above it.
pub fn toeplitz_map<T: Field>(u: &[T]) -> Result<DenseHermitian<T>> {
    let n = u.len();
    if n == 0 {
        return Err(Error::ShapeMismatch("Toeplitz generator must be non-empty".into()));
    }
    if u[0].im() != 0.0 {
        return Err(Error::InvalidParameter(format!(
            "Toeplitz generator needs a real first entry, got imaginary part {}",
            u[0].im()
        )));
    }
    DenseHermitian::from_lower_fn(n, |j, k| u[j - k])
}

/// Adjoint of [`toeplitz_map`] in the real inner product: entry `k` is the
/// inner product of `Q` with the elementary Toeplitz matrix carrying ones on
/// the `k`-th and `−k`-th diagonals.
pub fn toeplitz_adjoint<T: Field>(q: &DenseHermitian<T>) -> DVector<T> {
    let n = q.dim();
    DVector::from_fn(n, |k, _| {
        if k == 0 {
            return T::from_real(q.diagonal().iter().sum());
        }
        let mut acc = T::zero();
        for j in 0..n - k {
            acc += q.get(j + k, j) + q.get(j, j + k).conjugate();
        }
        acc
    })
}

/// Diagonal of `T*T`: `(N, 2(N−1), 2(N−2), …, 2)`.
pub fn toeplitz_gram_diagonal(n: usize) -> Vec<f64> {
    (0..n).map(|k| if k == 0 { n as f64 } else { 2.0 * (n - k) as f64 }).collect()
}

/// Orthogonal projection onto Hermitian Toeplitz matrices; replaces every
/// diagonal by its mean.
pub fn project_toeplitz<T: Field>(q: &DenseHermitian<T>) -> DenseHermitian<T> {
    let n = q.dim();
    let counts = toeplitz_gram_diagonal(n);
    let p = toeplitz_adjoint(q);
    let mut u: Vec<T> = p.iter().zip(counts.iter()).map(|(&v, &c)| v.unscale(c)).collect();
    u[0] = T::from_real(u[0].re());
    toeplitz_map(&u).expect("generator has a real first entry")
}
