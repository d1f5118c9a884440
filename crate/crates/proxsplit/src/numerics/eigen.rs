use nalgebra::{DMatrix, DVector, SymmetricEigen};

use super::{DenseHermitian, Field};
use crate::error::{Error, Result};

/// Eigendecomposition `M = V diag(w) Vᴴ` with eigenvalues in ascending order.
#[derive(Clone, Debug)]
pub struct HermitianEigen<T: Field> {
    pub values: DVector<f64>,
    pub vectors: DMatrix<T>,
}

/// Eigenvalue sign counts.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Inertia {
    pub positive: usize,
    pub negative: usize,
    pub zero: usize,
}

impl<T: Field> HermitianEigen<T> {
    pub fn inertia(&self, tol: f64) -> Inertia {
        let mut out = Inertia { positive: 0, negative: 0, zero: 0 };
        for &w in self.values.iter() {
            if w > tol {
                out.positive += 1;
            } else if w < -tol {
                out.negative += 1;
            } else {
                out.zero += 1;
            }
        }
        out
    }

    /// `V diag(f(w)) Vᴴ` restricted to the eigenpairs selected by `keep`.
    fn partial_reconstruct(&self, keep: impl Fn(f64) -> bool) -> DMatrix<T> {
        let n = self.vectors.nrows();
        let idx: Vec<usize> = (0..self.values.len()).filter(|&i| keep(self.values[i])).collect();
        if idx.is_empty() {
            return DMatrix::zeros(n, n);
        }
        // V_s diag(w_s) V_sᴴ computed as (V_s diag(w_s)) V_sᴴ
        let vs = DMatrix::from_fn(n, idx.len(), |i, j| self.vectors[(i, idx[j])]);
        let mut scaled = vs.clone();
        for (c, &k) in idx.iter().enumerate() {
            let w = self.values[k];
            scaled.column_mut(c).iter_mut().for_each(|x| *x = x.scale(w));
        }
        scaled * vs.adjoint()
    }

    pub fn reconstruct(&self) -> DenseHermitian<T> {
        DenseHermitian::from_nearly_hermitian(self.partial_reconstruct(|_| true))
    }
}

/// Hermitian eigendecomposition with ascending eigenvalues.
pub fn eig_hermitian<T: Field>(m: &DenseHermitian<T>) -> Result<HermitianEigen<T>> {
    if !m.is_finite() {
        return Err(Error::NonFinite);
    }
    let eig = SymmetricEigen::try_new(m.matrix().clone(), f64::EPSILON, 0).ok_or(Error::EigenFailure)?;
    let n = eig.eigenvalues.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values = DVector::from_fn(n, |i, _| eig.eigenvalues[order[i]]);
    let vectors = DMatrix::from_fn(n, n, |i, j| eig.eigenvectors[(i, order[j])]);
    Ok(HermitianEigen { values, vectors })
}

/// Frobenius projection onto the positive semidefinite cone:
/// `V diag(max(w, 0)) Vᴴ`.
pub fn project_psd<T: Field>(m: &DenseHermitian<T>) -> Result<DenseHermitian<T>> {
    let e = eig_hermitian(m)?;
    let n = m.dim();
    if n == 0 || e.values[0] >= 0.0 {
        return Ok(m.clone());
    }
    if e.values[n - 1] <= 0.0 {
        return Ok(DenseHermitian::zeros(n));
    }
    let positive = e.values.iter().filter(|&&w| w > 0.0).count();
    // reconstruct from whichever side of the spectrum is smaller
    let out = if 2 * positive <= n {
        e.partial_reconstruct(|w| w > 0.0)
    } else {
        m.matrix() - e.partial_reconstruct(|w| w <= 0.0)
    };
    Ok(DenseHermitian::from_nearly_hermitian(out))
}

/// Projection onto the negative semidefinite cone, computed as the exact
/// complement `M − Π₊(M)` of [`project_psd`].
pub fn project_nsd<T: Field>(m: &DenseHermitian<T>) -> Result<DenseHermitian<T>> {
    Ok(m.minus(&project_psd(m)?))
}

#[cfg(test)]
mod tests {
    use num_complex::Complex64;
    use rand::Rng;

    use super::*;
    use crate::numerics::seeded_rng;

    fn random_hermitian_c(n: usize, seed: u64) -> DenseHermitian<Complex64> {
        let mut rng = seeded_rng(seed);
        DenseHermitian::from_lower_fn(n, |_, _| {
            Complex64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5)
        })
        .unwrap()
    }

    #[test]
    fn identity_spectrum() {
        let e = eig_hermitian(&DenseHermitian::<f64>::identity(3)).unwrap();
        assert_eq!(e.values.as_slice(), &[1.0, 1.0, 1.0]);
    }

    #[test]
    fn diagonal_spectrum_is_sorted() {
        let m = DenseHermitian::<f64>::from_real_diagonal(&[2.0, -1.0]).unwrap();
        let e = eig_hermitian(&m).unwrap();
        assert_eq!(e.values.as_slice(), &[-1.0, 2.0]);
        // eigenvectors are the permuted identity, up to sign
        assert!((e.vectors[(1, 0)].abs() - 1.0).abs() < 1e-15);
        assert!((e.vectors[(0, 1)].abs() - 1.0).abs() < 1e-15);
        assert!(e.vectors[(0, 0)].abs() < 1e-15);
    }

    #[test]
    fn complex_reconstruction() {
        let m = random_hermitian_c(5, 7);
        let e = eig_hermitian(&m).unwrap();
        let r = e.reconstruct().minus(&m).norm();
        assert!(r < 1e-10 * m.norm(), "residual {r}");
        assert!(e.values.as_slice().windows(2).all(|w| w[0] <= w[1]));
    }

    #[test]
    fn projection_of_diag() {
        let m = DenseHermitian::<f64>::from_real_diagonal(&[1.0, -1.0]).unwrap();
        let p = project_psd(&m).unwrap();
        assert_eq!(p, DenseHermitian::from_real_diagonal(&[1.0, 0.0]).unwrap());
    }

    #[test]
    fn psd_input_is_unchanged() {
        let a = random_hermitian_c(4, 3);
        let psd = DenseHermitian::new(a.matrix() * a.matrix().adjoint()).unwrap();
        assert_eq!(project_psd(&psd).unwrap(), psd);
    }

    #[test]
    fn moreau_split_of_the_cone() {
        for seed in 0..20 {
            let m = random_hermitian_c(6, seed);
            let p = project_psd(&m).unwrap();
            let q = project_nsd(&m).unwrap();
            assert!(p.min_eigenvalue().unwrap() > -1e-12);
            assert!(q.max_eigenvalue().unwrap() < 1e-12);
            assert!(p.inner(&q).abs() < 1e-10 * m.norm_sq());
            assert!(p.plus(&q).minus(&m).norm() < 1e-14 * m.norm().max(1.0));
        }
    }

    #[test]
    fn inertia_counts() {
        let m = DenseHermitian::<f64>::from_real_diagonal(&[3.0, 0.0, -2.0, 1e-12]).unwrap();
        assert_eq!(m.inertia(1e-9).unwrap(), Inertia { positive: 1, negative: 1, zero: 2 });
    }

    #[test]
    fn non_finite_is_rejected() {
        let mut m = DenseHermitian::<f64>::identity(2);
        m.set_hermitian(0, 1, f64::INFINITY);
        assert_eq!(eig_hermitian(&m).unwrap_err(), Error::NonFinite);
    }
}
