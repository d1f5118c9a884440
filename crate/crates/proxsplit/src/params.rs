//! The operator parameter `S` of the extended proximal operator
//! `Prox_f^S(v) = argmin_z f(z) + ½‖S z − v‖²`.
//!
//! Every variant acts entrywise, so `apply`, `adjoint`, `inverse` and
//! `adjoint_inverse` all reduce to multiplying entry `(i, j)` by a power of a
//! fixed weight. The block-Hadamard variant is the dedicated parameter for
//! 2×2 block-structured semidefinite programs:
//!
//! ```text
//!            ⎡ α/β · X₁   α · X₀  ⎤
//!   S(X)  =  ⎣ α · X₀ᴴ    αβ · X₂ ⎦
//! ```
//!
//! It is the congruence `D X D` with `D = diag(√(α/β) I, √(αβ) I)`, so by
//! Sylvester's law of inertia it preserves the eigenvalue sign pattern of
//! every Hermitian input.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::{seeded_rng, BlockRegion, BlockShape, DenseHermitian, Field, Inertia, Layout, Point};

/// Default cap for entries of a diagonal energy parameter.
pub const DEFAULT_D_MAX: f64 = 1e8;

#[derive(Clone, Debug, PartialEq)]
pub enum OperatorParam {
    Identity,
    /// `S v = α v`, `α ≠ 0`.
    Scalar { alpha: f64 },
    /// `S = Diag(√d)` acting on vectors.
    DiagonalEnergy { d: Vec<f64> },
    /// Block-Hadamard weights `[[α/β, α], [α, αβ]]` on a partitioned matrix.
    SdpHadamard { alpha: f64, beta: f64, shape: BlockShape },
}

/// Raw block weights `[[top_left, off_diagonal], [off_diagonal, bottom_right]]`
/// of an entrywise matrix map.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BlockWeights {
    pub top_left: f64,
    pub off_diagonal: f64,
    pub bottom_right: f64,
    pub shape: BlockShape,
}

impl BlockWeights {
    pub fn weight(&self, i: usize, j: usize) -> f64 {
        match self.shape.region(i, j) {
            BlockRegion::TopLeft => self.top_left,
            BlockRegion::OffDiagonal => self.off_diagonal,
            BlockRegion::BottomRight => self.bottom_right,
        }
    }

    pub fn apply<T: Field>(&self, x: &DenseHermitian<T>) -> Result<DenseHermitian<T>> {
        self.shape.check_dim(x.dim())?;
        Ok(x.weighted(|i, j| self.weight(i, j)))
    }
}

/// Which of the four parameter maps to evaluate.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Power {
    Apply,
    Inverse,
    /// `S*S`
    Gram,
    /// `(S*S)⁻¹`
    GramInverse,
}

impl Power {
    fn exponent(self) -> i32 {
        match self {
            Power::Apply => 1,
            Power::Inverse => -1,
            Power::Gram => 2,
            Power::GramInverse => -2,
        }
    }
}

impl OperatorParam {
    pub fn scalar(alpha: f64) -> Result<Self> {
        if alpha == 0.0 || !alpha.is_finite() {
            return Err(Error::InvalidParameter(format!("scalar parameter must be finite and nonzero, got {alpha}")));
        }
        Ok(Self::Scalar { alpha })
    }

    /// Diagonal energy parameter with entries in `(0, d_max]`.
    pub fn diagonal_energy(d: Vec<f64>, d_max: f64) -> Result<Self> {
        if !(d_max > 0.0) {
            return Err(Error::InvalidParameter(format!("d_max must be positive, got {d_max}")));
        }
        if d.is_empty() {
            return Err(Error::InvalidParameter("diagonal energy vector is empty".into()));
        }
        if let Some(bad) = d.iter().find(|&&x| !(x > 0.0 && x <= d_max)) {
            return Err(Error::InvalidParameter(format!("energy {bad} outside (0, {d_max}]")));
        }
        Ok(Self::DiagonalEnergy { d })
    }

    pub fn sdp_hadamard(alpha: f64, beta: f64, shape: BlockShape) -> Result<Self> {
        if !(alpha > 0.0 && alpha.is_finite() && beta > 0.0 && beta.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "block parameter needs alpha, beta > 0, got ({alpha}, {beta})"
            )));
        }
        Ok(Self::SdpHadamard { alpha, beta, shape })
    }

    /// The `(α₁, α₂)` form `[[α₁², α₁α₂], [α₁α₂, α₂²]]`, converted through
    /// `α = α₁α₂`, `β = α₂/α₁`.
    pub fn sdp_from_factors(alpha1: f64, alpha2: f64, shape: BlockShape) -> Result<Self> {
        Self::sdp_hadamard(alpha1 * alpha2, alpha2 / alpha1, shape)
    }

    pub fn name(&self) -> String {
        match self {
            Self::Identity => "identity".into(),
            Self::Scalar { alpha } => format!("scalar(α = {alpha})"),
            Self::DiagonalEnergy { d } => format!("diagonal-energy(dim {})", d.len()),
            Self::SdpHadamard { alpha, beta, .. } => format!("sdp-hadamard(α = {alpha}, β = {beta})"),
        }
    }

    /// Block weights of the matrix map, if this variant has them.
    pub fn block_weights(&self) -> Option<BlockWeights> {
        match *self {
            Self::SdpHadamard { alpha, beta, shape } => Some(BlockWeights {
                top_left: alpha / beta,
                off_diagonal: alpha,
                bottom_right: alpha * beta,
                shape,
            }),
            _ => None,
        }
    }

    /// Whether `S` maps the PSD cone onto itself and its complement onto its
    /// complement.
    pub fn is_definiteness_invariant(&self) -> bool {
        match *self {
            Self::Identity | Self::SdpHadamard { .. } => true,
            Self::Scalar { alpha } => alpha > 0.0,
            Self::DiagonalEnergy { .. } => false,
        }
    }

    /// Whether the map multiplies every entry by a weight that is constant on
    /// each block (required by the closed-form linear-objective proxes).
    pub fn is_blockwise_constant(&self) -> bool {
        !matches!(self, Self::DiagonalEnergy { .. })
    }

    /// The parameter `S⁻¹` (equal to `(S*)⁻¹` since every variant is
    /// self-adjoint).
    pub fn inverse_param(&self) -> Self {
        match self {
            Self::Identity => Self::Identity,
            Self::Scalar { alpha } => Self::Scalar { alpha: 1.0 / alpha },
            Self::DiagonalEnergy { d } => Self::DiagonalEnergy { d: d.iter().map(|x| 1.0 / x).collect() },
            Self::SdpHadamard { alpha, beta, shape } => Self::SdpHadamard {
                alpha: 1.0 / alpha,
                beta: 1.0 / beta,
                shape: *shape,
            },
        }
    }

    /// Same as [`inverse_param`](Self::inverse_param); named for the dual
    /// proximal operator `Prox_{f*}^{(S*)⁻¹}`.
    pub fn adjoint_inverse_param(&self) -> Self {
        self.inverse_param()
    }

    fn check_layout(&self, layout: Layout) -> Result<()> {
        match (self, layout) {
            (Self::Identity | Self::Scalar { .. }, _) => Ok(()),
            (Self::DiagonalEnergy { d }, Layout::Vector(n)) if n == d.len() => Ok(()),
            (Self::DiagonalEnergy { d }, other) => Err(Error::ShapeMismatch(format!(
                "diagonal energy parameter of length {} cannot act on {other:?}",
                d.len()
            ))),
            (Self::SdpHadamard { shape, .. }, Layout::Matrix(n)) => shape.check_dim(n),
            (Self::SdpHadamard { .. }, other) => Err(Error::ShapeMismatch(format!(
                "block parameter needs a partitioned matrix, got {other:?}"
            ))),
        }
    }

    fn map<V: Point>(&self, v: &V, power: Power) -> Result<V> {
        self.check_layout(v.layout())?;
        let e = power.exponent();
        Ok(match self {
            Self::Identity => v.clone(),
            Self::Scalar { alpha } => v.scaled(alpha.powi(e)),
            Self::DiagonalEnergy { d } => {
                // Diag(√d)^e has entries d_i^(e/2)
                let w: Vec<f64> = d.iter().map(|x| x.powf(0.5 * e as f64)).collect();
                v.weighted(&|i, _| w[i])
            }
            Self::SdpHadamard { .. } => {
                let bw = self.block_weights().expect("block variant");
                let (tl, off, br) = (bw.top_left.powi(e), bw.off_diagonal.powi(e), bw.bottom_right.powi(e));
                let shape = bw.shape;
                v.weighted(&move |i, j| match shape.region(i, j) {
                    BlockRegion::TopLeft => tl,
                    BlockRegion::OffDiagonal => off,
                    BlockRegion::BottomRight => br,
                })
            }
        })
    }

    /// `S v`.
    pub fn apply<V: Point>(&self, v: &V) -> Result<V> {
        self.map(v, Power::Apply)
    }

    /// `S* v`; every variant is self-adjoint.
    pub fn adjoint<V: Point>(&self, v: &V) -> Result<V> {
        self.map(v, Power::Apply)
    }

    /// `S⁻¹ v`.
    pub fn inverse<V: Point>(&self, v: &V) -> Result<V> {
        self.map(v, Power::Inverse)
    }

    /// `(S*)⁻¹ v`.
    pub fn adjoint_inverse<V: Point>(&self, v: &V) -> Result<V> {
        self.map(v, Power::Inverse)
    }

    /// `S*S v`.
    pub fn gram<V: Point>(&self, v: &V) -> Result<V> {
        self.map(v, Power::Gram)
    }

    /// `(S*S)⁻¹ v`.
    pub fn gram_inverse<V: Point>(&self, v: &V) -> Result<V> {
        self.map(v, Power::GramInverse)
    }
}

/// Outcome of [`definiteness_invariant_check`].
#[derive(Clone, Debug)]
pub struct InertiaReport {
    pub trials: usize,
    pub passed: bool,
    /// First input whose inertia changed, with the inertia before and after.
    pub counterexample: Option<(DenseHermitian<f64>, Inertia, Inertia)>,
}

/// Random search for an input whose eigenvalue sign pattern changes under
/// the block weights. Trials alternate between Gaussian symmetric matrices
/// (generically indefinite) and rank-deficient PSD matrices.
pub fn inertia_check(weights: &BlockWeights, trials: usize, seed: u64) -> Result<InertiaReport> {
    let mut rng = seeded_rng(seed);
    let n = weights.shape.total();
    for t in 0..trials {
        let x = if t % 2 == 0 {
            DenseHermitian::<f64>::from_lower_fn(n, |_, _| rng.random::<f64>() * 2.0 - 1.0)?
        } else {
            let rank = rng.random_range(1..=n);
            let f = nalgebra::DMatrix::<f64>::from_fn(n, rank, |_, _| rng.random::<f64>() * 2.0 - 1.0);
            DenseHermitian::new(&f * f.transpose())?
        };
        let y = weights.apply(&x)?;
        // For a congruence `D X D`, eigenvalues scale by factors within
        // [d_min², d_max²] (Ostrowski), so an eigenvalue of X above the cut
        // maps above the cut times d_min².
        let tol_x = 1e-9 * x.norm().max(1.0);
        let tol_y = tol_x * weights.top_left.min(weights.bottom_right);
        let before = x.inertia(tol_x)?;
        let after = y.inertia(tol_y)?;
        if before != after {
            return Ok(InertiaReport { trials: t + 1, passed: false, counterexample: Some((x, before, after)) });
        }
    }
    Ok(InertiaReport { trials, passed: true, counterexample: None })
}

/// Checks numerically that `S` preserves matrix inertia. Only the matrix
/// variants that claim the property (identity and block-Hadamard) are
/// accepted.
pub fn definiteness_invariant_check(s: &OperatorParam, trials: usize, seed: u64) -> Result<InertiaReport> {
    let weights = match s {
        OperatorParam::SdpHadamard { .. } => s.block_weights().expect("block variant"),
        OperatorParam::Identity => BlockWeights {
            top_left: 1.0,
            off_diagonal: 1.0,
            bottom_right: 1.0,
            shape: BlockShape::new(3, 2)?,
        },
        other => {
            return Err(Error::InvalidParameter(format!(
                "definiteness check applies to matrix parameters, got {}",
                other.name()
            )))
        }
    };
    inertia_check(&weights, trials, seed)
}

/// Flat key/value form of [`OperatorParam`] used by configuration files.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ParamConfig {
    pub kind: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub beta: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub d: Option<Vec<f64>>,
    #[serde(rename = "N", default, skip_serializing_if = "Option::is_none")]
    pub n: Option<usize>,
    #[serde(rename = "K", default, skip_serializing_if = "Option::is_none")]
    pub k: Option<usize>,
}

impl From<&OperatorParam> for ParamConfig {
    fn from(p: &OperatorParam) -> Self {
        let empty = ParamConfig { kind: String::new(), alpha: None, beta: None, d: None, n: None, k: None };
        match p {
            OperatorParam::Identity => ParamConfig { kind: "identity".into(), ..empty },
            OperatorParam::Scalar { alpha } => ParamConfig { kind: "scalar".into(), alpha: Some(*alpha), ..empty },
            OperatorParam::DiagonalEnergy { d } => {
                ParamConfig { kind: "diagonal-energy".into(), d: Some(d.clone()), ..empty }
            }
            OperatorParam::SdpHadamard { alpha, beta, shape } => ParamConfig {
                kind: "sdp-hadamard".into(),
                alpha: Some(*alpha),
                beta: Some(*beta),
                n: Some(shape.n()),
                k: Some(shape.k()),
                ..empty
            },
        }
    }
}

impl TryFrom<ParamConfig> for OperatorParam {
    type Error = Error;

    fn try_from(c: ParamConfig) -> Result<Self> {
        let need = |v: Option<f64>, key: &str| {
            v.ok_or_else(|| Error::Serialization(format!("parameter kind `{}` needs key `{key}`", c.kind)))
        };
        match c.kind.as_str() {
            "identity" => Ok(Self::Identity),
            "scalar" => Self::scalar(need(c.alpha, "alpha")?),
            "diagonal-energy" => {
                let d = c.d.clone().ok_or_else(|| Error::Serialization("diagonal-energy needs key `d`".into()))?;
                Self::diagonal_energy(d, DEFAULT_D_MAX)
            }
            "sdp-hadamard" => {
                let n = c.n.ok_or_else(|| Error::Serialization("sdp-hadamard needs key `N`".into()))?;
                let k = c.k.ok_or_else(|| Error::Serialization("sdp-hadamard needs key `K`".into()))?;
                Self::sdp_hadamard(need(c.alpha, "alpha")?, need(c.beta, "beta")?, BlockShape::new(n, k)?)
            }
            other => Err(Error::Serialization(format!("unknown parameter kind `{other}`"))),
        }
    }
}

impl Serialize for OperatorParam {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        ParamConfig::from(self).serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for OperatorParam {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let c = ParamConfig::deserialize(deserializer)?;
        OperatorParam::try_from(c).map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use nalgebra::{DMatrix, DVector};
    use num_complex::Complex64;

    use super::*;

    fn shape(n: usize, k: usize) -> BlockShape {
        BlockShape::new(n, k).unwrap()
    }

    fn random_matrix(n: usize, seed: u64) -> DenseHermitian<Complex64> {
        let mut rng = seeded_rng(seed);
        DenseHermitian::from_lower_fn(n, |_, _| Complex64::new(rng.random(), rng.random())).unwrap()
    }

    #[test]
    fn identity_and_unit_block_are_no_ops() {
        let x = random_matrix(4, 1);
        assert_eq!(OperatorParam::Identity.apply(&x).unwrap(), x);
        let s = OperatorParam::sdp_hadamard(1.0, 1.0, shape(3, 1)).unwrap();
        assert_eq!(s.apply(&x).unwrap(), x);
    }

    #[test]
    fn weight_grid_by_hand() {
        let s = OperatorParam::sdp_hadamard(2.0, 2.0, shape(1, 1)).unwrap();
        let x = DenseHermitian::new(DMatrix::from_element(2, 2, 1.0)).unwrap();
        let y = s.apply(&x).unwrap();
        assert_eq!(*y.matrix(), DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 4.0]));
    }

    #[test]
    fn negative_scalar_inverse() {
        let s = OperatorParam::scalar(-3.0).unwrap();
        let v = DVector::from_vec(vec![3.0, -6.0]);
        assert_eq!(s.inverse(&v).unwrap(), DVector::from_vec(vec![-1.0, 2.0]));
        assert!(OperatorParam::scalar(0.0).is_err());
    }

    #[test]
    fn factor_form_matches_alpha_beta_form() {
        let (a1, a2) = (0.5, 3.0);
        let s = OperatorParam::sdp_from_factors(a1, a2, shape(2, 2)).unwrap();
        let w = s.block_weights().unwrap();
        assert!((w.top_left - a1 * a1).abs() < 1e-15);
        assert!((w.off_diagonal - a1 * a2).abs() < 1e-15);
        assert!((w.bottom_right - a2 * a2).abs() < 1e-15);
    }

    #[test]
    fn inverse_param_composes_to_identity() {
        let s = OperatorParam::sdp_hadamard(2.5, 0.3, shape(3, 2)).unwrap();
        let x = random_matrix(5, 9);
        let y = s.inverse_param().apply(&s.apply(&x).unwrap()).unwrap();
        assert!(y.minus(&x).norm() < 1e-14 * x.norm());
    }

    #[test]
    fn shape_errors() {
        let s = OperatorParam::sdp_hadamard(1.0, 2.0, shape(2, 1)).unwrap();
        assert!(s.apply(&random_matrix(4, 0)).is_err());
        assert!(s.apply(&DVector::<f64>::zeros(3)).is_err());
        let d = OperatorParam::diagonal_energy(vec![1.0, 2.0], DEFAULT_D_MAX).unwrap();
        assert!(d.apply(&DVector::<f64>::zeros(3)).is_err());
        assert!(d.apply(&random_matrix(2, 0)).is_err());
    }

    #[test]
    fn diagonal_energy_bounds() {
        assert!(OperatorParam::diagonal_energy(vec![1.0, 0.0], 1e8).is_err());
        assert!(OperatorParam::diagonal_energy(vec![1.0, 2e8], 1e8).is_err());
        let d = OperatorParam::diagonal_energy(vec![4.0, 9.0], 1e8).unwrap();
        let v = DVector::from_vec(vec![1.0, 1.0]);
        assert_eq!(d.apply(&v).unwrap(), DVector::from_vec(vec![2.0, 3.0]));
        assert_eq!(d.gram(&v).unwrap(), DVector::from_vec(vec![4.0, 9.0]));
    }

    #[test]
    fn block_parameter_rejects_non_positive() {
        assert!(OperatorParam::sdp_hadamard(-1.0, 1.0, shape(1, 1)).is_err());
        assert!(OperatorParam::sdp_hadamard(1.0, 0.0, shape(1, 1)).is_err());
    }

    #[test]
    fn unit_block_always_passes() {
        let s = OperatorParam::sdp_hadamard(1.0, 1.0, shape(3, 2)).unwrap();
        assert!(definiteness_invariant_check(&s, 200, 1).unwrap().passed);
    }

    #[test]
    fn skewed_block_keeps_psd_inputs_psd() {
        let s = OperatorParam::sdp_hadamard(3.0, 0.5, shape(3, 2)).unwrap();
        let report = definiteness_invariant_check(&s, 500, 2).unwrap();
        assert!(report.passed);
        let mut rng = seeded_rng(3);
        for _ in 0..50 {
            let f = DMatrix::<f64>::from_fn(5, 2, |_, _| rng.random::<f64>() - 0.5);
            let x = DenseHermitian::new(&f * f.transpose()).unwrap();
            assert!(s.apply(&x).unwrap().min_eigenvalue().unwrap() > -1e-12);
        }
    }

    /// β = 100 shrinks one block by 1e8 relative to the other; small but
    /// genuine eigenvalues must not be reclassified as zero.
    #[test]
    fn strongly_scaled_block_passes() {
        let s = OperatorParam::sdp_hadamard(0.01, 100.0, shape(3, 1)).unwrap();
        assert!(definiteness_invariant_check(&s, 1000, 7).unwrap().passed);
    }

    #[test]
    fn non_congruence_weights_fail() {
        let w = BlockWeights { top_left: 1.0, off_diagonal: 0.1, bottom_right: 1.0, shape: shape(2, 2) };
        let report = inertia_check(&w, 1000, 4).unwrap();
        assert!(!report.passed);
        let (_, before, after) = report.counterexample.unwrap();
        assert_ne!(before, after);
    }

    #[test]
    fn scalar_is_not_a_matrix_check_target() {
        assert!(definiteness_invariant_check(&OperatorParam::scalar(2.0).unwrap(), 10, 0).is_err());
    }

    #[test]
    fn config_round_trip() {
        let s = OperatorParam::sdp_hadamard(0.11, 2.25, shape(50, 1)).unwrap();
        let json = serde_json::to_string(&s).unwrap();
        assert!(json.contains("\"kind\":\"sdp-hadamard\""));
        assert!(json.contains("\"N\":50"));
        let back: OperatorParam = serde_json::from_str(&json).unwrap();
        assert_eq!(back, s);
        let bad: std::result::Result<OperatorParam, _> = serde_json::from_str(r#"{"kind":"scalar"}"#);
        assert!(bad.is_err());
    }
}
