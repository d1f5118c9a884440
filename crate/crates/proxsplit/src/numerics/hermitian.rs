use std::ops::{Add, Mul, Neg, Sub};

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::eigen::{eig_hermitian, HermitianEigen, Inertia};
use super::Field;
use crate::error::{Error, Result};

/// Partition of an `(n + k) × (n + k)` matrix into a top-left `n × n` block,
/// the `n × k` off-diagonal block (and its conjugate transpose) and the
/// bottom-right `k × k` block.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct BlockShape {
    n: usize,
    k: usize,
}

/// Which block of a [`BlockShape`] partition an entry belongs to.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BlockRegion {
    TopLeft,
    OffDiagonal,
    BottomRight,
}

impl BlockShape {
    pub fn new(n: usize, k: usize) -> Result<Self> {
        if n == 0 || k == 0 {
            return Err(Error::InvalidParameter(format!(
                "block sizes must be positive, got N = {n}, K = {k}"
            )));
        }
        Ok(Self { n, k })
    }

    /// Size of the top-left block.
    pub fn n(&self) -> usize {
        self.n
    }

    /// Size of the bottom-right block.
    pub fn k(&self) -> usize {
        self.k
    }

    pub fn total(&self) -> usize {
        self.n + self.k
    }

    pub fn region(&self, i: usize, j: usize) -> BlockRegion {
        match (i < self.n, j < self.n) {
            (true, true) => BlockRegion::TopLeft,
            (false, false) => BlockRegion::BottomRight,
            _ => BlockRegion::OffDiagonal,
        }
    }

    pub(crate) fn check_dim(&self, dim: usize) -> Result<()> {
        if dim != self.total() {
            return Err(Error::ShapeMismatch(format!(
                "block shape ({}, {}) partitions dimension {}, matrix has dimension {dim}",
                self.n,
                self.k,
                self.total()
            )));
        }
        Ok(())
    }
}

/// Squared Frobenius norms of the three blocks of a partitioned matrix.
///
/// `off_diagonal` counts the `n × k` block once; the full matrix norm is
/// `top_left + 2 off_diagonal + bottom_right`.
#[derive(Clone, Copy, Debug, PartialEq, Default, Serialize, Deserialize)]
pub struct BlockNorms {
    pub top_left: f64,
    pub off_diagonal: f64,
    pub bottom_right: f64,
}

impl BlockNorms {
    pub fn total(&self) -> f64 {
        self.top_left + 2.0 * self.off_diagonal + self.bottom_right
    }
}

/// A dense real-symmetric or complex-Hermitian matrix.
///
/// The Hermitian invariant is structural: every constructor symmetrizes its
/// input, and the arithmetic exposed here (sums, real scalings, symmetric
/// entrywise weights) preserves exact Hermitian symmetry in floating point.
#[derive(Clone, Debug, PartialEq)]
pub struct DenseHermitian<T: Field> {
    data: DMatrix<T>,
}

impl<T: Field> DenseHermitian<T> {
    /// Wraps a square matrix, replacing it by `(M + Mᴴ) / 2`.
    pub fn new(m: DMatrix<T>) -> Result<Self> {
        if !m.is_square() {
            return Err(Error::ShapeMismatch(format!(
                "expected a square matrix, got {} × {}",
                m.nrows(),
                m.ncols()
            )));
        }
        if m.iter().any(|x| !x.is_finite_scalar()) {
            return Err(Error::NonFinite);
        }
        Ok(Self::symmetrized(m))
    }

    /// Builds a matrix from its lower triangle (`i >= j`); the upper triangle
    /// is filled with conjugates and the diagonal is forced real.
    pub fn from_lower_fn(n: usize, mut f: impl FnMut(usize, usize) -> T) -> Result<Self> {
        let mut m = DMatrix::<T>::zeros(n, n);
        for j in 0..n {
            for i in j..n {
                let v = f(i, j);
                if !v.is_finite_scalar() {
                    return Err(Error::NonFinite);
                }
                if i == j {
                    m[(i, i)] = T::from_real(v.re());
                } else {
                    m[(i, j)] = v;
                    m[(j, i)] = v.conjugate();
                }
            }
        }
        Ok(Self { data: m })
    }

    pub fn zeros(n: usize) -> Self {
        Self { data: DMatrix::zeros(n, n) }
    }

    pub fn identity(n: usize) -> Self {
        Self { data: DMatrix::identity(n, n) }
    }

    pub fn from_real_diagonal(d: &[f64]) -> Result<Self> {
        if d.iter().any(|x| !x.is_finite()) {
            return Err(Error::NonFinite);
        }
        let n = d.len();
        Ok(Self {
            data: DMatrix::from_fn(n, n, |i, j| if i == j { T::from_real(d[i]) } else { T::zero() }),
        })
    }

    fn symmetrized(m: DMatrix<T>) -> Self {
        let half = T::from_real(0.5);
        let adj = m.adjoint();
        Self { data: (m + adj) * half }
    }

    /// Wraps a matrix that is Hermitian up to roundoff (e.g. a reconstructed
    /// eigendecomposition) and restores exact symmetry.
    pub(crate) fn from_nearly_hermitian(data: DMatrix<T>) -> Self {
        Self::symmetrized(data)
    }

    pub fn dim(&self) -> usize {
        self.data.nrows()
    }

    pub fn get(&self, i: usize, j: usize) -> T {
        self.data[(i, j)]
    }

    pub fn matrix(&self) -> &DMatrix<T> {
        &self.data
    }

    pub fn into_matrix(self) -> DMatrix<T> {
        self.data
    }

    /// Real diagonal entries.
    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.dim()).map(|i| self.data[(i, i)].re()).collect()
    }

    /// `Re tr(selfᴴ other)`.
    pub fn inner(&self, other: &Self) -> f64 {
        self.data.iter().zip(other.data.iter()).map(|(a, b)| a.dot_re(*b)).sum()
    }

    pub fn norm_sq(&self) -> f64 {
        self.data.iter().map(|a| a.modulus_squared()).sum()
    }

    pub fn norm(&self) -> f64 {
        self.norm_sq().sqrt()
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|x| x.is_finite_scalar())
    }

    /// Multiplies entry `(i, j)` by `w(i, j)`. `w` must be symmetric in its
    /// arguments for the result to stay Hermitian.
    pub fn weighted(&self, w: impl Fn(usize, usize) -> f64) -> Self {
        let n = self.dim();
        let mut data = self.data.clone();
        for j in 0..n {
            for i in 0..n {
                data[(i, j)] = data[(i, j)].scale(w(i, j));
            }
        }
        Self { data }
    }

    /// Overwrites entry `(i, j)` with `v` and `(j, i)` with its conjugate.
    pub fn set_hermitian(&mut self, i: usize, j: usize, v: T) {
        if i == j {
            self.data[(i, i)] = T::from_real(v.re());
        } else {
            self.data[(i, j)] = v;
            self.data[(j, i)] = v.conjugate();
        }
    }

    /// Squared Frobenius norms of the blocks of `shape`.
    pub fn block_norms(&self, shape: BlockShape) -> Result<BlockNorms> {
        shape.check_dim(self.dim())?;
        let mut out = BlockNorms::default();
        let n = self.dim();
        for j in 0..n {
            for i in 0..n {
                let v = self.data[(i, j)].modulus_squared();
                match shape.region(i, j) {
                    BlockRegion::TopLeft => out.top_left += v,
                    BlockRegion::BottomRight => out.bottom_right += v,
                    // each off-diagonal entry appears in both copies
                    BlockRegion::OffDiagonal => out.off_diagonal += 0.5 * v,
                }
            }
        }
        Ok(out)
    }

    /// Copy of the top-left `n × n` block.
    pub fn top_left(&self, n: usize) -> Self {
        Self { data: self.data.view((0, 0), (n, n)).into_owned() }
    }

    /// Replaces the top-left block with `block`.
    pub fn set_top_left(&mut self, block: &Self) -> Result<()> {
        let n = block.dim();
        if n > self.dim() {
            return Err(Error::ShapeMismatch(format!(
                "block of dimension {n} does not fit a matrix of dimension {}",
                self.dim()
            )));
        }
        self.data.view_mut((0, 0), (n, n)).copy_from(&block.data);
        Ok(())
    }

    pub fn eig(&self) -> Result<HermitianEigen<T>> {
        eig_hermitian(self)
    }

    pub fn min_eigenvalue(&self) -> Result<f64> {
        Ok(self.eig()?.values[0])
    }

    pub fn max_eigenvalue(&self) -> Result<f64> {
        let e = self.eig()?;
        Ok(e.values[e.values.len() - 1])
    }

    /// Counts of positive, negative and zero eigenvalues with `|w| <= tol`
    /// treated as zero.
    pub fn inertia(&self, tol: f64) -> Result<Inertia> {
        Ok(self.eig()?.inertia(tol))
    }

    pub fn plus(&self, other: &Self) -> Self {
        Self { data: &self.data + &other.data }
    }

    pub fn minus(&self, other: &Self) -> Self {
        Self { data: &self.data - &other.data }
    }

    pub fn scaled(&self, c: f64) -> Self {
        Self { data: self.data.map(|x| x.scale(c)) }
    }

    /// `a * self + b * other`.
    pub fn lin_comb(&self, a: f64, other: &Self, b: f64) -> Self {
        let mut data = self.data.clone();
        data.zip_apply(&other.data, |x, y| *x = x.scale(a) + y.scale(b));
        Self { data }
    }
}

impl<'a, T: Field> Add<&'a DenseHermitian<T>> for &'a DenseHermitian<T> {
    type Output = DenseHermitian<T>;

    fn add(self, rhs: &'a DenseHermitian<T>) -> DenseHermitian<T> {
        self.plus(rhs)
    }
}

impl<'a, T: Field> Sub<&'a DenseHermitian<T>> for &'a DenseHermitian<T> {
    type Output = DenseHermitian<T>;

    fn sub(self, rhs: &'a DenseHermitian<T>) -> DenseHermitian<T> {
        self.minus(rhs)
    }
}

impl<T: Field> Mul<f64> for &DenseHermitian<T> {
    type Output = DenseHermitian<T>;

    fn mul(self, rhs: f64) -> DenseHermitian<T> {
        self.scaled(rhs)
    }
}

impl<T: Field> Neg for &DenseHermitian<T> {
    type Output = DenseHermitian<T>;

    fn neg(self) -> DenseHermitian<T> {
        self.scaled(-1.0)
    }
}

/// Serialized form: dimension plus row-major real and imaginary parts (the
/// imaginary array is omitted for real matrices).
#[derive(Serialize, Deserialize)]
struct HermitianRepr {
    dim: usize,
    re: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    im: Option<Vec<f64>>,
}

impl<T: Field> Serialize for DenseHermitian<T> {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        let n = self.dim();
        let entries = (0..n).flat_map(|i| (0..n).map(move |j| (i, j)));
        let re = entries.clone().map(|(i, j)| self.data[(i, j)].re()).collect();
        let im = T::IS_COMPLEX.then(|| entries.map(|(i, j)| self.data[(i, j)].im()).collect());
        HermitianRepr { dim: n, re, im }.serialize(serializer)
    }
}

impl<'de, T: Field> Deserialize<'de> for DenseHermitian<T> {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error as _;
        let r = HermitianRepr::deserialize(deserializer)?;
        let n = r.dim;
        if r.re.len() != n * n || r.im.as_ref().is_some_and(|im| im.len() != n * n) {
            return Err(D::Error::custom(format!("matrix data does not match dimension {n}")));
        }
        let im = |k: usize| r.im.as_ref().map_or(0.0, |v| v[k]);
        DenseHermitian::new(DMatrix::from_fn(n, n, |i, j| T::from_parts(r.re[i * n + j], im(i * n + j))))
            .map_err(D::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use num_complex::Complex64;

    use super::*;

    #[test]
    fn construction_symmetrizes() {
        let m = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 4.0, 3.0]);
        let h = DenseHermitian::new(m).unwrap();
        assert_eq!(h.get(0, 1), 3.0);
        assert_eq!(h.get(1, 0), 3.0);
    }

    #[test]
    fn complex_diagonal_is_real() {
        let m = DMatrix::from_row_slice(
            2,
            2,
            &[
                Complex64::new(1.0, 0.5),
                Complex64::new(0.0, 1.0),
                Complex64::new(0.0, -1.0),
                Complex64::new(2.0, 0.0),
            ],
        );
        let h = DenseHermitian::new(m).unwrap();
        assert_eq!(h.get(0, 0).im, 0.0);
        assert_eq!(h.get(0, 1), h.get(1, 0).conj());
        assert_eq!(*h.matrix(), h.matrix().adjoint());
    }

    #[test]
    fn rejects_non_finite_and_non_square() {
        let m = DMatrix::from_row_slice(2, 2, &[1.0, f64::NAN, 0.0, 1.0]);
        assert_eq!(DenseHermitian::new(m), Err(Error::NonFinite));
        let m = DMatrix::<f64>::zeros(2, 3);
        assert!(matches!(DenseHermitian::new(m), Err(Error::ShapeMismatch(_))));
    }

    #[test]
    fn block_norms_add_up() {
        let shape = BlockShape::new(2, 1).unwrap();
        let h = DenseHermitian::<f64>::from_lower_fn(3, |i, j| (i + 2 * j + 1) as f64).unwrap();
        let b = h.block_norms(shape).unwrap();
        assert!((b.total() - h.norm_sq()).abs() < 1e-12);
        // x-column is (entries (2,0), (2,1)) = (3, 5)
        assert!((b.off_diagonal - 34.0).abs() < 1e-12);
        assert_eq!(b.bottom_right, 49.0);
    }

    #[test]
    fn block_shape_rejects_empty_blocks() {
        assert!(BlockShape::new(0, 1).is_err());
        assert!(BlockShape::new(3, 0).is_err());
        let s = BlockShape::new(3, 1).unwrap();
        assert!(s.check_dim(5).is_err());
        assert_eq!(s.region(3, 0), BlockRegion::OffDiagonal);
    }

    #[test]
    fn json_round_trip_is_exact() {
        let m = DenseHermitian::from_lower_fn(3, |i, j| Complex64::new(0.1 * i as f64 + 1.0 / 3.0, (i as f64 - j as f64) / 7.0)).unwrap();
        let s = serde_json::to_string(&m).unwrap();
        let back: DenseHermitian<Complex64> = serde_json::from_str(&s).unwrap();
        assert_eq!(back, m);
        let r = DenseHermitian::<f64>::from_real_diagonal(&[0.1, 1e-300]).unwrap();
        let back: DenseHermitian<f64> = serde_json::from_str(&serde_json::to_string(&r).unwrap()).unwrap();
        assert_eq!(back, r);
        assert!(serde_json::from_str::<DenseHermitian<f64>>(r#"{"dim":2,"re":[1.0]}"#).is_err());
    }
}
