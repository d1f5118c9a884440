//! Extended proximal operators `Prox_f^S(v) = argmin_z f(z) + ½‖S z − v‖²`.
//!
//! `S ∘ Prox_f^S` equals the ordinary proximal operator of `f ∘ S⁻¹`, which
//! is what makes these evaluators interchangeable with conventional ones in
//! the splitting schemes. All evaluators here are closed form:
//!
//! * indicator of the PSD cone (and its conjugate, the NSD indicator) for any
//!   definiteness-invariant `S`: `S ∘ Prox^S = Π₊`;
//! * a linear objective `⟨X, G⟩` on the affine set `diag(X) = 1`;
//! * a linear objective on Hermitian matrices whose top-left block is
//!   Toeplitz and whose last column is fixed on an index set;
//! * the l1 norm for diagonal parameters.

use nalgebra::DVector;

use crate::error::{Error, Result};
use crate::numerics::{project_nsd, project_psd, project_toeplitz, DenseHermitian, Field, Point};
use crate::params::OperatorParam;

/// An evaluator of `Prox_f^S` for a fixed function `f`.
pub trait ProxOperator<V: Point>: Send + Sync {
    fn prox(&self, s: &OperatorParam, v: &V) -> Result<V>;

    fn name(&self) -> &'static str;
}

/// Constraint carried by the smooth-free part `f` of a problem.
#[derive(Clone, Debug, PartialEq)]
pub enum Constraint {
    None,
    /// `diag(X) = 1`.
    DiagonalOnes,
    /// Top-left block Toeplitz and `X[j, N] = x*_j` for `j ∈ Ω`.
    ToeplitzFixedEntries { observed: usize },
}

/// The `(f, g)` pair of `minimize f(x) + g(x)`.
pub struct ProxPair<V: Point> {
    pub f: Box<dyn ProxOperator<V>>,
    pub g: Box<dyn ProxOperator<V>>,
    /// Evaluator of `Prox_{g*}`, needed by the primal-dual scheme.
    pub g_conjugate: Option<Box<dyn ProxOperator<V>>>,
    /// `G_f` when `f` is linear.
    pub objective: Option<V>,
    pub constraint: Constraint,
}

impl<V: Point> ProxPair<V> {
    pub fn new(f: Box<dyn ProxOperator<V>>, g: Box<dyn ProxOperator<V>>) -> Self {
        Self { f, g, g_conjugate: None, objective: None, constraint: Constraint::None }
    }

    pub fn with_conjugate(mut self, g_conjugate: Box<dyn ProxOperator<V>>) -> Self {
        self.g_conjugate = Some(g_conjugate);
        self
    }

    pub fn with_objective(mut self, objective: V, constraint: Constraint) -> Self {
        self.objective = Some(objective);
        self.constraint = constraint;
        self
    }
}

fn require_invariant(s: &OperatorParam) -> Result<()> {
    if !s.is_definiteness_invariant() {
        return Err(Error::NotDefinitenessInvariant(s.name()));
    }
    Ok(())
}

/// `Prox_g^S` for `g = δ_{S₊}`: returns `S⁻¹ Π₊(V)`.
pub fn prox_psd_indicator<T: Field>(s: &OperatorParam, v: &DenseHermitian<T>) -> Result<DenseHermitian<T>> {
    require_invariant(s)?;
    s.inverse(&project_psd(v)?)
}

/// `Prox_h^P` for `h = δ_{S₋}` (the conjugate of the PSD indicator):
/// returns `P⁻¹ Π₋(V)`.
pub fn prox_nsd_indicator<T: Field>(p: &OperatorParam, v: &DenseHermitian<T>) -> Result<DenseHermitian<T>> {
    require_invariant(p)?;
    p.inverse(&project_nsd(v)?)
}

#[derive(Clone, Copy, Debug, Default)]
pub struct PsdIndicator;

impl<T: Field> ProxOperator<DenseHermitian<T>> for PsdIndicator {
    fn prox(&self, s: &OperatorParam, v: &DenseHermitian<T>) -> Result<DenseHermitian<T>> {
        prox_psd_indicator(s, v)
    }

    fn name(&self) -> &'static str {
        "psd-indicator"
    }
}

#[derive(Clone, Copy, Debug, Default)]
pub struct NsdIndicator;

impl<T: Field> ProxOperator<DenseHermitian<T>> for NsdIndicator {
    fn prox(&self, s: &OperatorParam, v: &DenseHermitian<T>) -> Result<DenseHermitian<T>> {
        prox_nsd_indicator(s, v)
    }

    fn name(&self) -> &'static str {
        "nsd-indicator"
    }
}

fn require_blockwise(s: &OperatorParam) -> Result<()> {
    if !s.is_blockwise_constant() {
        return Err(Error::InvalidParameter(format!(
            "{} is not an entrywise matrix parameter",
            s.name()
        )));
    }
    Ok(())
}

fn check_same_dim<T: Field>(g: &DenseHermitian<T>, v: &DenseHermitian<T>) -> Result<()> {
    if g.dim() != v.dim() {
        return Err(Error::ShapeMismatch(format!(
            "objective has dimension {}, point has dimension {}",
            g.dim(),
            v.dim()
        )));
    }
    Ok(())
}

/// Minimizer of `⟨X, G⟩ + ½‖S X − V‖²` subject to `diag(X) = 1`.
///
/// With an entrywise `S` the objective separates per entry, so the result is
/// `S⁻¹ V − (S*S)⁻¹ G` with the diagonal overwritten by ones.
pub fn prox_linear_diag1<T: Field>(
    g: &DenseHermitian<T>,
    s: &OperatorParam,
    v: &DenseHermitian<T>,
) -> Result<DenseHermitian<T>> {
    require_blockwise(s)?;
    check_same_dim(g, v)?;
    let mut x = s.inverse(v)?.minus(&s.gram_inverse(g)?);
    for i in 0..x.dim() {
        x.set_hermitian(i, i, T::one());
    }
    Ok(x)
}

/// Observed entries of the last column of an `(N + 1) × (N + 1)` matrix,
/// stored as zero-based row indices into the `N`-vector block.
#[derive(Clone, Debug, PartialEq)]
pub struct FixedEntrySet<T: Field> {
    indices: Vec<usize>,
    values: Vec<T>,
}

impl<T: Field> FixedEntrySet<T> {
    pub fn new(indices: Vec<usize>, values: Vec<T>) -> Result<Self> {
        if indices.len() != values.len() {
            return Err(Error::ShapeMismatch(format!(
                "{} observed indices but {} values",
                indices.len(),
                values.len()
            )));
        }
        if values.iter().any(|v| !v.is_finite_scalar()) {
            return Err(Error::NonFinite);
        }
        Ok(Self { indices, values })
    }

    pub fn empty() -> Self {
        Self { indices: Vec::new(), values: Vec::new() }
    }

    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, T)> + '_ {
        self.indices.iter().copied().zip(self.values.iter().copied())
    }
}

/// Minimizer of `⟨X, G⟩ + ½‖S X − V‖²` over Hermitian `X` with a Toeplitz
/// top-left `N × N` block and `X[j, N] = x*_j` for observed `j`.
///
/// Steps, in order: project the top-left block of `V` onto Toeplitz
/// matrices, form `S⁻¹ V − (S*S)⁻¹ G`, then overwrite the observed entries
/// (and their conjugate mirrors). The weight of `S` is constant on the
/// top-left block, so the projection commutes with the weighting.
pub fn prox_linear_sr<T: Field>(
    g: &DenseHermitian<T>,
    observed: &FixedEntrySet<T>,
    s: &OperatorParam,
    v: &DenseHermitian<T>,
) -> Result<DenseHermitian<T>> {
    require_blockwise(s)?;
    check_same_dim(g, v)?;
    let dim = v.dim();
    if dim < 2 {
        return Err(Error::ShapeMismatch("super-resolution variable needs dimension at least 2".into()));
    }
    let n = dim - 1;
    if let OperatorParam::SdpHadamard { shape, .. } = s {
        if shape.n() != n || shape.k() != 1 {
            return Err(Error::ShapeMismatch(format!(
                "parameter partition ({}, {}) does not match ({n}, 1)",
                shape.n(),
                shape.k()
            )));
        }
    }
    if let Some(&bad) = observed.indices().iter().find(|&&j| j >= n) {
        return Err(Error::ShapeMismatch(format!("observed index {bad} out of range 0..{n}")));
    }
    let mut w = v.clone();
    w.set_top_left(&project_toeplitz(&v.top_left(n)))?;
    let mut x = s.inverse(&w)?.minus(&s.gram_inverse(g)?);
    for (j, value) in observed.iter() {
        x.set_hermitian(j, n, value);
    }
    Ok(x)
}

/// `f(X) = ⟨X, G⟩` restricted to `diag(X) = 1`.
#[derive(Clone, Debug)]
pub struct LinearDiagOnes<T: Field> {
    pub objective: DenseHermitian<T>,
}

impl<T: Field> ProxOperator<DenseHermitian<T>> for LinearDiagOnes<T> {
    fn prox(&self, s: &OperatorParam, v: &DenseHermitian<T>) -> Result<DenseHermitian<T>> {
        prox_linear_diag1(&self.objective, s, v)
    }

    fn name(&self) -> &'static str {
        "linear-diag-ones"
    }
}

/// `f(X) = ⟨X, G⟩` restricted to Toeplitz top-left block and fixed entries.
#[derive(Clone, Debug)]
pub struct LinearToeplitzFixed<T: Field> {
    pub objective: DenseHermitian<T>,
    pub observed: FixedEntrySet<T>,
}

impl<T: Field> ProxOperator<DenseHermitian<T>> for LinearToeplitzFixed<T> {
    fn prox(&self, s: &OperatorParam, v: &DenseHermitian<T>) -> Result<DenseHermitian<T>> {
        prox_linear_sr(&self.objective, &self.observed, s, v)
    }

    fn name(&self) -> &'static str {
        "linear-toeplitz-fixed"
    }
}

fn soft_threshold(u: f64) -> f64 {
    u.signum() * (u.abs() - 1.0).max(0.0)
}

/// `argmin_x ‖x‖₁ + ½‖D x − v‖²` for `D = Diag(√d)`:
/// `(1/d) ⊙ T(√d ⊙ v)` with the unit soft threshold `T`.
pub fn prox_l1_orthogonal(d: &[f64], v: &[f64]) -> Result<Vec<f64>> {
    if d.len() != v.len() {
        return Err(Error::ShapeMismatch(format!("energies of length {} for a point of length {}", d.len(), v.len())));
    }
    if let Some(bad) = d.iter().find(|&&x| !(x > 0.0)) {
        return Err(Error::InvalidParameter(format!("energies must be positive, got {bad}")));
    }
    Ok(d.iter().zip(v).map(|(&di, &vi)| soft_threshold(di.sqrt() * vi) / di).collect())
}

/// The l1 norm on real vectors, for the identity, scalar and diagonal
/// parameters (all diagonal matrices `D`, where the closed form
/// `(DᵀD)⁻¹ T(Dᵀ v)` holds).
#[derive(Clone, Copy, Debug, Default)]
pub struct L1Norm;

impl ProxOperator<DVector<f64>> for L1Norm {
    fn prox(&self, s: &OperatorParam, v: &DVector<f64>) -> Result<DVector<f64>> {
        let n = v.len();
        let diag: Vec<f64> = match s {
            OperatorParam::Identity => vec![1.0; n],
            OperatorParam::Scalar { alpha } => vec![*alpha; n],
            OperatorParam::DiagonalEnergy { d } => {
                if d.len() != n {
                    return Err(Error::ShapeMismatch(format!("parameter length {} vs point length {n}", d.len())));
                }
                d.iter().map(|x| x.sqrt()).collect()
            }
            other => {
                return Err(Error::InvalidParameter(format!("l1 prox needs a diagonal parameter, got {}", other.name())))
            }
        };
        Ok(DVector::from_fn(n, |i, _| soft_threshold(diag[i] * v[i]) / (diag[i] * diag[i])))
    }

    fn name(&self) -> &'static str {
        "l1-norm"
    }
}

/// `‖v − S Prox_f^S(v) − (S*)⁻¹ Prox_{f*}^{(S*)⁻¹}(v)‖`, zero when `f_prox`
/// and `fstar_prox` evaluate a conjugate pair.
pub fn moreau_residual<V: Point>(
    s: &OperatorParam,
    f_prox: &dyn ProxOperator<V>,
    fstar_prox: &dyn ProxOperator<V>,
    v: &V,
) -> Result<f64> {
    let dual = s.adjoint_inverse_param();
    let primal_part = s.apply(&f_prox.prox(s, v)?)?;
    let dual_part = s.adjoint_inverse(&fstar_prox.prox(&dual, v)?)?;
    Ok(v.minus(&primal_part).minus(&dual_part).norm())
}

/// `‖Px − Py‖² − ⟨Px − Py, x − y⟩` for `P = S ∘ Prox_f^S`. Firm
/// nonexpansiveness of `P` is the statement that this is never positive.
pub fn firm_nonexpansiveness_gap<V: Point>(s: &OperatorParam, prox: &dyn ProxOperator<V>, x: &V, y: &V) -> Result<f64> {
    let px = s.apply(&prox.prox(s, x)?)?;
    let py = s.apply(&prox.prox(s, y)?)?;
    let dp = px.minus(&py);
    Ok(dp.norm_sq() - dp.inner(&x.minus(y)))
}
