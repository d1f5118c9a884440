//! Parameter selection.
//!
//! With `ψ⁰ = 0` the worst-case rate bound of the parametrized iteration is
//! anchored on `‖S x*‖² + ‖(S*)⁻¹ λ*‖²`, so the best parameter minimizes that
//! quantity over the admissible family. For scalar and diagonal families the
//! minimizer is closed form; for the 2×2 block SDP parameter each coordinate
//! is closed form and the joint optimum is found by a deterministic search.
//! The BQP and super-resolution estimators replace `(x*, λ*)` by a-priori
//! energy estimates.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::{BlockNorms, BlockShape, DenseHermitian, Field, Point};
use crate::params::OperatorParam;

/// A primal–dual solution `(x*, λ*)` together with the initialization the
/// rate bound is anchored on.
#[derive(Clone, Debug)]
pub struct SolutionPair<V> {
    pub x: V,
    pub lambda: V,
    pub psi0: V,
    /// Block partition, for matrix solutions.
    pub shape: Option<BlockShape>,
}

impl<V: Point> SolutionPair<V> {
    /// Pair with the default zero initialization.
    pub fn new(x: V, lambda: V) -> Result<Self> {
        if x.layout() != lambda.layout() {
            return Err(Error::ShapeMismatch(format!("primal {:?} vs dual {:?}", x.layout(), lambda.layout())));
        }
        let psi0 = x.zeros_like();
        Ok(Self { x, lambda, psi0, shape: None })
    }

    pub fn with_shape(mut self, shape: BlockShape) -> Self {
        self.shape = Some(shape);
        self
    }

    pub fn with_psi0(mut self, psi0: V) -> Result<Self> {
        if psi0.layout() != self.x.layout() {
            return Err(Error::ShapeMismatch("initialization does not match the solution".into()));
        }
        self.psi0 = psi0;
        Ok(self)
    }

    fn require_zero_init(&self) -> Result<()> {
        if self.psi0.norm() != 0.0 {
            return Err(Error::InvalidParameter("closed-form optimum assumes a zero initialization".into()));
        }
        Ok(())
    }
}

/// `‖S x* − ψ⁰‖² + ‖(S*)⁻¹ λ* − ψ⁰‖²`, the quantity the optimal parameter
/// minimizes.
pub fn objective<V: Point>(s: &OperatorParam, pair: &SolutionPair<V>) -> Result<f64> {
    let p = s.apply(&pair.x)?.minus(&pair.psi0).norm_sq();
    let d = s.adjoint_inverse(&pair.lambda)?.minus(&pair.psi0).norm_sq();
    Ok(p + d)
}

/// `α* = √(‖λ*‖ / ‖x*‖)`, the positive root.
pub fn optimal_scalar<V: Point>(pair: &SolutionPair<V>) -> Result<f64> {
    pair.require_zero_init()?;
    let nx = pair.x.norm();
    let nl = pair.lambda.norm();
    if nx == 0.0 {
        return Err(Error::Undefined("optimal scalar needs a non-zero primal solution".into()));
    }
    if nl == 0.0 {
        return Err(Error::Undefined("optimal scalar is 0 for a zero dual solution".into()));
    }
    Ok((nl / nx).sqrt())
}

/// `d_i* = |λ_i* / x_i*|`, confined to `[1/d_max, d_max]`: entries with
/// `x_i* = 0` go to `d_max`, entries with `λ_i* = 0` to `1/d_max`.
pub fn optimal_diagonal(pair: &SolutionPair<DVector<f64>>, d_max: f64) -> Result<Vec<f64>> {
    pair.require_zero_init()?;
    if !(d_max >= 1.0 && d_max.is_finite()) {
        return Err(Error::InvalidParameter(format!("d_max must be finite and at least 1, got {d_max}")));
    }
    let floor = 1.0 / d_max;
    Ok(pair
        .x
        .iter()
        .zip(pair.lambda.iter())
        .map(|(&x, &l)| if x == 0.0 { d_max } else { (l / x).abs().clamp(floor, d_max) })
        .collect())
}

/// Squared block norms of `X*` and `Λ*`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct SdpEnergies {
    pub primal: BlockNorms,
    pub dual: BlockNorms,
}

impl SdpEnergies {
    pub fn of<T: Field>(pair: &SolutionPair<DenseHermitian<T>>) -> Result<Self> {
        let shape = pair
            .shape
            .ok_or_else(|| Error::InvalidParameter("SDP tuning needs a block partition".into()))?;
        pair.require_zero_init()?;
        Ok(Self { primal: pair.x.block_norms(shape)?, dual: pair.lambda.block_norms(shape)? })
    }

    /// Exact expansion of `‖S X*‖² + ‖(S*)⁻¹ Λ*‖²` for `S = SdpHadamard(α, β)`:
    /// `(α/β)²‖X₁‖² + 2α²‖X₀‖² + (αβ)²‖X₂‖² + (β/α)²‖Λ₁‖² + 2‖Λ₀‖²/α² + ‖Λ₂‖²/(αβ)²`.
    pub fn objective(&self, alpha: f64, beta: f64) -> f64 {
        let (x, l) = (&self.primal, &self.dual);
        let (a2, b2) = (alpha * alpha, beta * beta);
        (a2 / b2) * x.top_left
            + 2.0 * a2 * x.off_diagonal
            + a2 * b2 * x.bottom_right
            + (b2 / a2) * l.top_left
            + 2.0 * l.off_diagonal / a2
            + l.bottom_right / (a2 * b2)
    }

    /// `‖X₁‖² + ‖Λ₂‖²`, the weight of `β⁻²` at `α = 1`.
    fn p(&self) -> f64 {
        self.primal.top_left + self.dual.bottom_right
    }

    /// `‖X₂‖² + ‖Λ₁‖²`, the weight of `β²` at `α = 1`.
    fn q(&self) -> f64 {
        self.primal.bottom_right + self.dual.top_left
    }

    /// The constant `c = 2(‖X₀‖² + ‖Λ₀‖²)/√(PQ)` of the β gain.
    pub fn gain_constant(&self) -> f64 {
        2.0 * (self.primal.off_diagonal + self.dual.off_diagonal) / (self.p() * self.q()).sqrt()
    }
}

/// Positive `(α, β)` pair of the block SDP parameter.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SdpChoice {
    pub alpha: f64,
    pub beta: f64,
}

impl SdpChoice {
    pub fn to_param(self, shape: BlockShape) -> Result<OperatorParam> {
        OperatorParam::sdp_hadamard(self.alpha, self.beta, shape)
    }
}

/// Separate-case optima: `α̃ = √(‖Λ*‖/‖X*‖)` with `β = 1`, and
/// `β̃ = ((‖X₁‖² + ‖Λ₂‖²)/(‖X₂‖² + ‖Λ₁‖²))^{1/4}` with `α = 1`.
pub fn sdp_separate_choices<T: Field>(pair: &SolutionPair<DenseHermitian<T>>) -> Result<(f64, f64)> {
    let e = SdpEnergies::of(pair)?;
    let (x, l) = (e.primal.total(), e.dual.total());
    if x == 0.0 || l == 0.0 {
        return Err(Error::Undefined("α̃ needs non-zero primal and dual solutions".into()));
    }
    if e.p() == 0.0 || e.q() == 0.0 {
        return Err(Error::Undefined("β̃ needs non-zero block energies".into()));
    }
    Ok(((l / x).powf(0.25), (e.p() / e.q()).powf(0.25)))
}

/// Log-spaced grid for [`sdp_joint_search`].
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub lo: f64,
    pub hi: f64,
    pub points: usize,
    /// Rounds of per-coordinate golden-section refinement after the grid.
    pub refine_rounds: usize,
}

impl Default for GridSpec {
    fn default() -> Self {
        Self { lo: 1e-3, hi: 1e3, points: 200, refine_rounds: 30 }
    }
}

impl GridSpec {
    pub fn values(&self) -> Result<Vec<f64>> {
        if self.points == 0 {
            return Err(Error::InvalidParameter("empty search grid".into()));
        }
        if !(self.lo > 0.0 && self.hi >= self.lo && self.hi.is_finite()) {
            return Err(Error::InvalidParameter(format!("invalid grid range [{}, {}]", self.lo, self.hi)));
        }
        if self.points == 1 {
            return Ok(vec![self.lo]);
        }
        let (l0, l1) = (self.lo.ln(), self.hi.ln());
        let step = (l1 - l0) / (self.points - 1) as f64;
        Ok((0..self.points).map(|i| (l0 + step * i as f64).exp()).collect())
    }

    fn log_step(&self) -> f64 {
        if self.points < 2 {
            0.0
        } else {
            (self.hi.ln() - self.lo.ln()) / (self.points - 1) as f64
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct JointChoice {
    pub choice: SdpChoice,
    pub objective: f64,
}

/// Golden-section minimum of a unimodal `f` on `[a, b]`.
fn golden_section(mut a: f64, mut b: f64, f: impl Fn(f64) -> f64) -> f64 {
    const INV_PHI: f64 = 0.618_033_988_749_894_8;
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    while (b - a).abs() > 1e-12 * (1.0 + a.abs().max(b.abs())) {
        if fc <= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - INV_PHI * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INV_PHI * (b - a);
            fd = f(d);
        }
    }
    0.5 * (a + b)
}

/// Minimizes the exact block expansion of `‖S X*‖² + ‖(S*)⁻¹ Λ*‖²` over
/// `(α, β)`: exhaustive evaluation on the grid (ties go to the
/// lexicographically smallest `(α, β)`), then alternating golden-section
/// refinement in log coordinates, where the objective is convex.
pub fn sdp_joint_search<T: Field>(pair: &SolutionPair<DenseHermitian<T>>, grid: &GridSpec) -> Result<JointChoice> {
    let e = SdpEnergies::of(pair)?;
    joint_search_energies(&e, grid)
}

/// [`sdp_joint_search`] on precomputed energies.
pub fn joint_search_energies(e: &SdpEnergies, grid: &GridSpec) -> Result<JointChoice> {
    let values = grid.values()?;
    let mut best = (f64::INFINITY, values[0], values[0]);
    for &a in &values {
        for &b in &values {
            let v = e.objective(a, b);
            if v < best.0 {
                best = (v, a, b);
            }
        }
    }
    if !best.0.is_finite() {
        return Err(Error::Undefined("joint objective is not finite on the grid".into()));
    }
    let (lo, hi) = (grid.lo.ln(), grid.hi.ln());
    let h = grid.log_step();
    let (mut la, mut lb) = (best.1.ln(), best.2.ln());
    let mut value = best.0;
    let f = |la: f64, lb: f64| e.objective(la.exp(), lb.exp());
    for _ in 0..grid.refine_rounds {
        if h == 0.0 {
            break;
        }
        let na = golden_section((la - h).max(lo), (la + h).min(hi), |t| f(t, lb));
        if f(na, lb) < value {
            la = na;
            value = f(la, lb);
        }
        let nb = golden_section((lb - h).max(lo), (lb + h).min(hi), |t| f(la, t));
        if f(la, nb) < value {
            lb = nb;
            value = f(la, lb);
        }
    }
    Ok(JointChoice { choice: SdpChoice { alpha: la.exp(), beta: lb.exp() }, objective: value })
}

/// `ξ_S = ‖S x* + (S*)⁻¹λ* − ψ⁰‖² / ‖x* + λ* − ψ⁰‖²`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GainReport {
    pub xi: f64,
    pub numerator: f64,
    pub denominator: f64,
}

pub fn acceleration_gain<V: Point>(s: &OperatorParam, pair: &SolutionPair<V>) -> Result<GainReport> {
    let numerator = s.apply(&pair.x)?.plus(&s.adjoint_inverse(&pair.lambda)?).minus(&pair.psi0).norm_sq();
    let denominator = pair.x.plus(&pair.lambda).minus(&pair.psi0).norm_sq();
    if denominator == 0.0 {
        return Err(Error::Undefined("gain is undefined when x* + λ* = ψ⁰".into()));
    }
    Ok(GainReport { xi: numerator / denominator, numerator, denominator })
}

/// Gain of the optimal scalar: `(2‖x*‖‖λ*‖ + 2⟨x*, λ*⟩)/‖x* + λ*‖²`.
pub fn scalar_gain<V: Point>(x: &V, lambda: &V) -> f64 {
    (2.0 * x.norm() * lambda.norm() + 2.0 * x.inner(lambda)) / x.plus(lambda).norm_sq()
}

/// Gain of `α̃` for orthogonal SDP pairs: `2/(α̃² + α̃⁻²)`.
pub fn alpha_tilde_gain(alpha: f64) -> f64 {
    2.0 / (alpha * alpha + 1.0 / (alpha * alpha))
}

/// Gain of `β̃` for orthogonal SDP pairs: `(2 + c)/(β̃² + β̃⁻² + c)`.
pub fn beta_tilde_gain(beta: f64, c: f64) -> f64 {
    (2.0 + c) / (beta * beta + 1.0 / (beta * beta) + c)
}

/// `λ* = −∇f(x*)`: the dual solution of `f + g` from a gradient of `f`.
pub fn translate_dual<V: Point>(grad_f_at_xstar: &V) -> V {
    grad_f_at_xstar.scaled(-1.0)
}

/// Multipliers of `diag(X) = 1` read off a dual solution of the BQP
/// relaxation: `Λ* = −G_f + Diag(μ*)`, so `μ* = diag(Λ* + G_f)`.
pub fn diagonal_multipliers(lambda: &DenseHermitian<f64>, g: &DenseHermitian<f64>) -> Result<Vec<f64>> {
    if lambda.dim() != g.dim() {
        return Err(Error::ShapeMismatch(format!("dual {} vs objective {}", lambda.dim(), g.dim())));
    }
    Ok(lambda.plus(g).diagonal())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BqpRegime {
    /// `‖G_f‖ < N`: both α and β are estimated.
    Small,
    /// `‖G_f‖ ≥ N`: only α is used, `β = 1`.
    Large,
}

/// Which a-priori estimate to use.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EstimateMode {
    /// `(α̃_est, 1)`.
    Alpha,
    /// `(1, β̃_est)`.
    Beta,
    /// The joint recommendation.
    Joint,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BqpEstimate {
    pub regime: BqpRegime,
    pub g_norm: f64,
    pub alpha_tilde: f64,
    pub beta_tilde: f64,
    pub joint: SdpChoice,
}

impl BqpEstimate {
    pub fn choice(&self, mode: EstimateMode) -> SdpChoice {
        match (self.regime, mode) {
            (BqpRegime::Large, _) | (BqpRegime::Small, EstimateMode::Alpha) => {
                SdpChoice { alpha: self.alpha_tilde, beta: 1.0 }
            }
            (BqpRegime::Small, EstimateMode::Beta) => SdpChoice { alpha: 1.0, beta: self.beta_tilde },
            (BqpRegime::Small, EstimateMode::Joint) => self.joint,
        }
    }
}

/// `G_f = [AᵀA, −Aᵀb; −bᵀA, 0]` for `A` of size `K × N` and `b ∈ R^K`.
pub fn bqp_objective(a: &DMatrix<f64>, b: &DVector<f64>) -> Result<DenseHermitian<f64>> {
    if a.nrows() != b.len() {
        return Err(Error::ShapeMismatch(format!("A has {} rows but b has length {}", a.nrows(), b.len())));
    }
    let n = a.ncols();
    let ata = a.transpose() * a;
    let atb = a.transpose() * b;
    DenseHermitian::from_lower_fn(n + 1, |i, j| match (i == n, j == n) {
        (false, false) => ata[(i, j)],
        (true, false) => -atb[j],
        (false, true) => -atb[i],
        (true, true) => 0.0,
    })
}

/// A-priori BQP estimate from `‖G_f‖`, `‖AᵀA‖` and `N`; the regime follows
/// `‖G_f‖ < N` unless forced (ties go to the large regime).
pub fn bqp_estimate_from_norms(g_norm: f64, ata_norm: f64, n: usize, regime: Option<BqpRegime>) -> Result<BqpEstimate> {
    if n == 0 {
        return Err(Error::InvalidParameter("N must be positive".into()));
    }
    if !(g_norm > 0.0 && g_norm.is_finite()) {
        return Err(Error::Undefined(format!("estimate needs a non-zero finite ‖G_f‖, got {g_norm}")));
    }
    let nf = n as f64;
    let regime = regime.unwrap_or(if g_norm < nf { BqpRegime::Small } else { BqpRegime::Large });
    let alpha_tilde = (g_norm / (nf + 1.0)).sqrt();
    let beta_tilde = match regime {
        BqpRegime::Small => (nf * nf / (1.0 + ata_norm * ata_norm)).powf(0.25),
        BqpRegime::Large => 1.0,
    };
    let joint = match regime {
        BqpRegime::Small => SdpChoice { alpha: 2f64.sqrt() * alpha_tilde, beta: beta_tilde / 2f64.sqrt() },
        BqpRegime::Large => SdpChoice { alpha: alpha_tilde, beta: 1.0 },
    };
    Ok(BqpEstimate { regime, g_norm, alpha_tilde, beta_tilde, joint })
}

/// A-priori BQP estimate from the problem data (`A` is `K × N`).
pub fn bqp_estimate(a: &DMatrix<f64>, b: &DVector<f64>) -> Result<BqpEstimate> {
    let g = bqp_objective(a, b)?;
    let ata = a.transpose() * a;
    bqp_estimate_from_norms(g.norm(), ata.norm(), a.ncols(), None)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SrEstimate {
    /// `1/√((N + 1)σ)`.
    pub alpha_tilde: f64,
    /// `√(2N/3)`.
    pub beta_tilde: f64,
    /// `(1/√(0.8 (N + 1) σ), √(N/K))`.
    pub joint: SdpChoice,
}

impl SrEstimate {
    pub fn choice(&self, mode: EstimateMode) -> SdpChoice {
        match mode {
            EstimateMode::Alpha => SdpChoice { alpha: self.alpha_tilde, beta: 1.0 },
            EstimateMode::Beta => SdpChoice { alpha: 1.0, beta: self.beta_tilde },
            EstimateMode::Joint => self.joint,
        }
    }
}

/// A-priori super-resolution estimate for `N` measurements, `K` spikes and
/// amplitudes drawn from `N(0, σ²)`.
pub fn sr_estimate(n: usize, k: usize, sigma: f64) -> Result<SrEstimate> {
    if n == 0 || k == 0 {
        return Err(Error::InvalidParameter("N and K must be positive".into()));
    }
    if !(sigma > 0.0 && sigma.is_finite()) {
        return Err(Error::InvalidParameter(format!("sigma must be positive, got {sigma}")));
    }
    let nf = n as f64;
    Ok(SrEstimate {
        alpha_tilde: 1.0 / ((nf + 1.0) * sigma).sqrt(),
        beta_tilde: (2.0 * nf / 3.0).sqrt(),
        joint: SdpChoice { alpha: 1.0 / (0.8 * (nf + 1.0) * sigma).sqrt(), beta: (nf / k as f64).sqrt() },
    })
}
