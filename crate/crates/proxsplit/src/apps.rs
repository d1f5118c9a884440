//! The two block-structured SDP applications: the semidefinite relaxation
//! of a Boolean quadratic program and Toeplitz-based super-resolution of a
//! spike train from partial Fourier samples. Both are
//! `minimize ⟨X, G_f⟩ + δ_{S₊}(X)` over an affine set, with a `(N, 1)` block
//! partition, and both are solved with DRS from `Ψ⁰ = 0`.
//!
//! There is no external ground truth: [`reference_solve`] runs DRS to a
//! tight optimality residual, and two references computed under different
//! parameters must agree since the solution does not depend on `S`.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::seq::index;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::{gaussian_fill, seeded_rng, toeplitz_map, BlockShape, DenseHermitian, Field};
use crate::params::OperatorParam;
use crate::prox::{Constraint, FixedEntrySet, LinearDiagOnes, LinearToeplitzFixed, NsdIndicator, ProxPair, PsdIndicator};
use crate::splitting::{run_drs, SolveOptions, StopRule, StopStatus};
use crate::tuning::bqp_objective;

pub use crate::splitting::mse;

/// Format tag written into instance files.
pub const INSTANCE_FORMAT: &str = "proxsplit-instance v1";

/// Attempts allowed when rejection-sampling separated spike locations.
pub const MAX_LOCATION_ATTEMPTS: usize = 100_000;

/// `minimize ‖A x − b‖²` over `x ∈ {±1}ᴺ`, relaxed to an `(N + 1)`-dimensional
/// SDP with objective `G_f = [AᵀA, −Aᵀb; −bᵀA, 0]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "BqpRepr", into = "BqpRepr")]
pub struct BqpInstance {
    pub n: usize,
    pub k: usize,
    pub sigma_a: f64,
    pub sigma_b: f64,
    pub seed: u64,
    /// `K × N`.
    pub a: DMatrix<f64>,
    pub b: DVector<f64>,
    pub g: DenseHermitian<f64>,
}

#[derive(Serialize, Deserialize)]
struct BqpRepr {
    n: usize,
    k: usize,
    sigma_a: f64,
    sigma_b: f64,
    seed: u64,
    /// Row-major `K × N`.
    a: Vec<f64>,
    b: Vec<f64>,
}

impl From<BqpInstance> for BqpRepr {
    fn from(i: BqpInstance) -> Self {
        let a = (0..i.k).flat_map(|r| (0..i.n).map(move |c| (r, c))).map(|(r, c)| i.a[(r, c)]).collect();
        BqpRepr { n: i.n, k: i.k, sigma_a: i.sigma_a, sigma_b: i.sigma_b, seed: i.seed, a, b: i.b.as_slice().to_vec() }
    }
}

impl TryFrom<BqpRepr> for BqpInstance {
    type Error = Error;

    fn try_from(r: BqpRepr) -> Result<Self> {
        if r.a.len() != r.n * r.k || r.b.len() != r.k {
            return Err(Error::Serialization(format!("BQP data does not match N = {}, K = {}", r.n, r.k)));
        }
        BqpInstance::from_data(
            DMatrix::from_row_slice(r.k, r.n, &r.a),
            DVector::from_vec(r.b),
            r.sigma_a,
            r.sigma_b,
            r.seed,
        )
    }
}

impl BqpInstance {
    /// Instance from explicit data; `A` is `K × N`.
    pub fn from_data(a: DMatrix<f64>, b: DVector<f64>, sigma_a: f64, sigma_b: f64, seed: u64) -> Result<Self> {
        if a.ncols() == 0 || a.nrows() == 0 {
            return Err(Error::InvalidParameter("A must be non-empty".into()));
        }
        let g = bqp_objective(&a, &b)?;
        Ok(Self { n: a.ncols(), k: a.nrows(), sigma_a, sigma_b, seed, a, b, g })
    }

    pub fn shape(&self) -> BlockShape {
        BlockShape::new(self.n, 1).expect("N ≥ 1")
    }

    pub fn dim(&self) -> usize {
        self.n + 1
    }

    /// `diag(AᵀA)`.
    pub fn ata_diagonal(&self) -> Vec<f64> {
        (0..self.n).map(|j| self.a.column(j).norm_squared()).collect()
    }

    pub fn prox_pair(&self) -> ProxPair<DenseHermitian<f64>> {
        ProxPair::new(Box::new(LinearDiagOnes { objective: self.g.clone() }), Box::new(PsdIndicator))
            .with_conjugate(Box::new(NsdIndicator))
            .with_objective(self.g.clone(), Constraint::DiagonalOnes)
    }
}

/// Seeded BQP instance with `A ∈ R^{K×N}`, `b ∈ R^K` drawn i.i.d. from
/// `N(0, σ_A²)` and `N(0, σ_b²)` (A first, column by column, then b).
pub fn gen_bqp(n: usize, k: usize, sigma_a: f64, sigma_b: f64, seed: u64) -> Result<BqpInstance> {
    if n == 0 || k == 0 {
        return Err(Error::InvalidParameter("N and K must be positive".into()));
    }
    let mut rng = seeded_rng(seed);
    let a = gaussian_fill(&mut rng, k, n, sigma_a)?;
    let b = gaussian_fill(&mut rng, k, 1, sigma_b)?.column(0).into_owned();
    BqpInstance::from_data(a, b, sigma_a, sigma_b, seed)
}

/// Super-resolution from `|Ω|` of the `N` samples
/// `x*_n = Σ_k c_k e^{−i2πnτ_k}`, posed over
/// `X = [T(u), x; xᴴ, t]` with `G_f = diag(I/(2N), 1/2)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "SrRepr", into = "SrRepr")]
pub struct SrInstance {
    pub n: usize,
    pub k: usize,
    pub sigma: f64,
    pub obs_frac: f64,
    pub seed: u64,
    pub taus: Vec<f64>,
    pub c: Vec<f64>,
    pub x_star: Vec<Complex64>,
    /// Zero-based observed indices, ascending.
    pub omega: Vec<usize>,
    pub g: DenseHermitian<Complex64>,
}

#[derive(Serialize, Deserialize)]
struct SrRepr {
    n: usize,
    k: usize,
    sigma: f64,
    obs_frac: f64,
    seed: u64,
    taus: Vec<f64>,
    c: Vec<f64>,
    x_star: Vec<Complex64>,
    omega: Vec<usize>,
}

impl From<SrInstance> for SrRepr {
    fn from(i: SrInstance) -> Self {
        SrRepr {
            n: i.n,
            k: i.k,
            sigma: i.sigma,
            obs_frac: i.obs_frac,
            seed: i.seed,
            taus: i.taus,
            c: i.c,
            x_star: i.x_star,
            omega: i.omega,
        }
    }
}

impl TryFrom<SrRepr> for SrInstance {
    type Error = Error;

    fn try_from(r: SrRepr) -> Result<Self> {
        if r.taus.len() != r.k || r.c.len() != r.k || r.x_star.len() != r.n {
            return Err(Error::Serialization("super-resolution data does not match N, K".into()));
        }
        if r.omega.iter().any(|&j| j >= r.n) {
            return Err(Error::Serialization("observed index out of range".into()));
        }
        Ok(SrInstance {
            g: sr_objective(r.n),
            n: r.n,
            k: r.k,
            sigma: r.sigma,
            obs_frac: r.obs_frac,
            seed: r.seed,
            taus: r.taus,
            c: r.c,
            x_star: r.x_star,
            omega: r.omega,
        })
    }
}

/// `diag(I_N/(2N), 1/2)`.
pub fn sr_objective(n: usize) -> DenseHermitian<Complex64> {
    let mut d = vec![0.5 / n as f64; n];
    d.push(0.5);
    DenseHermitian::from_real_diagonal(&d).expect("finite diagonal")
}

/// Wraparound distance on `[0, 1)`.
pub fn circular_distance(a: f64, b: f64) -> f64 {
    let d = (a - b).abs().rem_euclid(1.0);
    d.min(1.0 - d)
}

/// `Σ_k c_k e^{−i2πnτ_k}` for `n = 0, …, N − 1`.
pub fn measurements(n: usize, taus: &[f64], c: &[f64]) -> Vec<Complex64> {
    (0..n)
        .map(|m| {
            taus.iter()
                .zip(c)
                .map(|(&tau, &ck)| Complex64::from_polar(ck, -2.0 * PI * m as f64 * tau))
                .sum()
        })
        .collect()
}

impl SrInstance {
    pub fn shape(&self) -> BlockShape {
        BlockShape::new(self.n, 1).expect("N ≥ 1")
    }

    pub fn dim(&self) -> usize {
        self.n + 1
    }

    /// `Σ|c_k|`.
    pub fn amplitude_sum(&self) -> f64 {
        self.c.iter().map(|c| c.abs()).sum()
    }

    /// `(1/K) Σ|c_k|`.
    pub fn mean_amplitude(&self) -> f64 {
        self.amplitude_sum() / self.k as f64
    }

    /// `u_m = Σ_k |c_k| e^{−i2πmτ_k}`, the Toeplitz generator of the
    /// Vandermonde-decomposed solution; `u_0 = Σ|c_k|`.
    pub fn true_u(&self) -> Vec<Complex64> {
        let abs: Vec<f64> = self.c.iter().map(|c| c.abs()).collect();
        let mut u = measurements(self.n, &self.taus, &abs);
        u[0] = Complex64::new(u[0].re, 0.0);
        u
    }

    /// `Σ_k |c_k| v_k v_kᴴ` with `v_k = [sgn(c_k) ā(τ_k); 1]`: the lifted
    /// spike train, which solves the SDP whenever recovery is exact.
    pub fn vandermonde_solution(&self) -> Result<DenseHermitian<Complex64>> {
        let n = self.n;
        let u = self.true_u();
        let t = toeplitz_map(&u)?;
        let mut x = DenseHermitian::zeros(n + 1);
        x.set_top_left(&t)?;
        for (j, &v) in self.x_star.iter().enumerate() {
            x.set_hermitian(j, n, v);
        }
        x.set_hermitian(n, n, Complex64::new(self.amplitude_sum(), 0.0));
        Ok(x)
    }

    pub fn observed(&self) -> FixedEntrySet<Complex64> {
        let values = self.omega.iter().map(|&j| self.x_star[j]).collect();
        FixedEntrySet::new(self.omega.clone(), values).expect("indices and values align")
    }

    pub fn prox_pair(&self) -> ProxPair<DenseHermitian<Complex64>> {
        let f = LinearToeplitzFixed { objective: self.g.clone(), observed: self.observed() };
        ProxPair::new(Box::new(f), Box::new(PsdIndicator))
            .with_conjugate(Box::new(NsdIndicator))
            .with_objective(self.g.clone(), Constraint::ToeplitzFixedEntries { observed: self.omega.len() })
    }
}

/// Seeded super-resolution instance: `K` locations in `[0, 1)` with pairwise
/// wraparound separation at least `1/N` (whole-set rejection sampling),
/// amplitudes from `N(0, σ²)`, and `round(obs_frac · N)` observed indices
/// drawn without replacement.
pub fn gen_sr(n: usize, k: usize, sigma: f64, obs_frac: f64, seed: u64) -> Result<SrInstance> {
    if n == 0 || k == 0 {
        return Err(Error::InvalidParameter("N and K must be positive".into()));
    }
    if !(obs_frac > 0.0 && obs_frac <= 1.0) {
        return Err(Error::InvalidParameter(format!("observed fraction must lie in (0, 1], got {obs_frac}")));
    }
    if k >= n {
        return Err(Error::InvalidParameter(format!("{k} spikes cannot be separated by 1/{n} on the unit circle")));
    }
    let sep = 1.0 / n as f64;
    let mut rng = seeded_rng(seed);
    let mut taus = Vec::with_capacity(k);
    let mut found = false;
    for _ in 0..MAX_LOCATION_ATTEMPTS {
        taus.clear();
        taus.extend((0..k).map(|_| rng.random::<f64>()));
        let separated = (0..k).all(|i| (i + 1..k).all(|j| circular_distance(taus[i], taus[j]) >= sep));
        if separated {
            found = true;
            break;
        }
    }
    if !found {
        return Err(Error::InvalidParameter(format!(
            "no {k} locations with separation 1/{n} after {MAX_LOCATION_ATTEMPTS} attempts"
        )));
    }
    let c = gaussian_fill(&mut rng, k, 1, sigma)?.as_slice().to_vec();
    let x_star = measurements(n, &taus, &c);
    let m = ((obs_frac * n as f64).round() as usize).clamp(1, n);
    let mut omega = index::sample(&mut rng, n, m).into_vec();
    omega.sort_unstable();
    Ok(SrInstance { n, k, sigma, obs_frac, seed, taus, c, x_star, omega, g: sr_objective(n) })
}

/// A generated problem of either application.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "app", rename_all = "kebab-case")]
pub enum Instance {
    Bqp(BqpInstance),
    Sr(SrInstance),
}

#[derive(Serialize, Deserialize)]
struct InstanceFile {
    format: String,
    instance: Instance,
}

impl Instance {
    pub fn seed(&self) -> u64 {
        match self {
            Instance::Bqp(i) => i.seed,
            Instance::Sr(i) => i.seed,
        }
    }

    pub fn shape(&self) -> BlockShape {
        match self {
            Instance::Bqp(i) => i.shape(),
            Instance::Sr(i) => i.shape(),
        }
    }

    /// Self-describing JSON; floats round-trip bit for bit.
    pub fn to_json(&self) -> Result<String> {
        let file = InstanceFile { format: INSTANCE_FORMAT.into(), instance: self.clone() };
        serde_json::to_string_pretty(&file).map_err(|e| Error::Serialization(e.to_string()))
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let file: InstanceFile = serde_json::from_str(s).map_err(|e| Error::Serialization(e.to_string()))?;
        if file.format != INSTANCE_FORMAT {
            return Err(Error::Serialization(format!("unsupported instance format '{}'", file.format)));
        }
        Ok(file.instance)
    }
}

/// Tolerance and cap for [`reference_solve`].
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReferenceOptions {
    pub tol: f64,
    pub max_iters: usize,
}

impl Default for ReferenceOptions {
    fn default() -> Self {
        Self { tol: 1e-10, max_iters: 200_000 }
    }
}

/// High-precision solution used as the MSE reference.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound(serialize = "T: Field", deserialize = "T: Field"))]
pub struct ReferenceSolution<T: Field> {
    /// `X^{k+1}`: exactly feasible for the affine constraints.
    pub x: DenseHermitian<T>,
    /// `Z^k`: exactly PSD.
    pub z: DenseHermitian<T>,
    /// `Λ^k`: exactly NSD.
    pub lambda: DenseHermitian<T>,
    pub iterations: usize,
    /// Achieved `‖X^{k+1} − Z^k‖`.
    pub residual: f64,
    /// Whether `residual ≤ tol` was reached within the cap; otherwise the
    /// solution is a partial-precision reference.
    pub converged: bool,
    pub param: OperatorParam,
}

/// DRS from `Ψ⁰ = 0` to optimality residual `opts.tol`.
pub fn reference_solve<T: Field>(
    pair: &ProxPair<DenseHermitian<T>>,
    s: &OperatorParam,
    dim: usize,
    opts: ReferenceOptions,
) -> Result<ReferenceSolution<T>> {
    let psi0 = DenseHermitian::zeros(dim);
    let run = run_drs(pair, s, &psi0, &SolveOptions::new(StopRule::optimality(opts.tol, opts.max_iters)))?;
    let st = run.state;
    let residual = st.x.minus(&st.z).norm();
    Ok(ReferenceSolution {
        x: st.x,
        z: st.z,
        lambda: st.lambda,
        iterations: st.k,
        residual,
        converged: run.trace.status == StopStatus::Converged,
        param: s.clone(),
    })
}

/// `‖A − B‖ / ‖B‖`.
pub fn relative_difference<T: Field>(a: &DenseHermitian<T>, b: &DenseHermitian<T>) -> f64 {
    a.minus(b).norm() / b.norm().max(f64::MIN_POSITIVE)
}

/// One inequality `lower ≤ value ≤ upper` checked with slack.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundCheck {
    pub name: String,
    pub lower: f64,
    pub value: f64,
    pub upper: f64,
    pub ok: bool,
}

impl BoundCheck {
    pub fn new(name: &str, lower: f64, value: f64, upper: f64, slack: f64) -> Self {
        let ok = value >= lower - slack && value <= upper + slack;
        Self { name: name.to_string(), lower, value, upper, ok }
    }
}

/// Optimality structure of an SDP primal–dual pair: `X ⪰ 0`, `Λ ⪯ 0`,
/// `⟨X, Λ⟩ = 0`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct KktReport {
    /// `|⟨X, Λ⟩| / (‖X‖ ‖Λ‖)`.
    pub inner_relative: f64,
    pub x_min_eigenvalue: f64,
    pub lambda_max_eigenvalue: f64,
}

impl KktReport {
    pub fn of<T: Field>(x: &DenseHermitian<T>, lambda: &DenseHermitian<T>) -> Result<Self> {
        let scale = (x.norm() * lambda.norm()).max(f64::MIN_POSITIVE);
        Ok(Self {
            inner_relative: x.inner(lambda).abs() / scale,
            x_min_eigenvalue: x.min_eigenvalue()?,
            lambda_max_eigenvalue: lambda.max_eigenvalue()?,
        })
    }

    pub fn holds(&self, inner_tol: f64, eig_tol: f64) -> bool {
        self.inner_relative < inner_tol && self.x_min_eigenvalue >= -eig_tol && self.lambda_max_eigenvalue <= eig_tol
    }
}

/// Energy and multiplier inequalities a BQP relaxation solution satisfies:
/// `N ≤ ‖X₁‖² ≤ N²`, `N + 1 ≤ ‖X‖² ≤ (N + 1)²`, `μ₁ ≤ diag(AᵀA)`, `μ₂ ≤ 0`
/// and `Σ μ = ⟨X, G_f⟩`, with `μ = diag(Λ + G_f)`.
pub fn bqp_bound_checks(inst: &BqpInstance, x: &DenseHermitian<f64>, lambda: &DenseHermitian<f64>, slack: f64) -> Result<Vec<BoundCheck>> {
    let n = inst.n as f64;
    let norms = x.block_norms(inst.shape())?;
    let mu = crate::tuning::diagonal_multipliers(lambda, &inst.g)?;
    let ata = inst.ata_diagonal();
    let mu1_excess = mu.iter().zip(&ata).map(|(m, d)| m - d).fold(f64::NEG_INFINITY, f64::max);
    let mu_gap = mu.iter().sum::<f64>() - x.inner(&inst.g);
    Ok(vec![
        BoundCheck::new("‖X₁‖²", n, norms.top_left, n * n, slack),
        BoundCheck::new("‖X‖²", n + 1.0, x.norm_sq(), (n + 1.0).powi(2), slack),
        BoundCheck::new("max(μ₁ − diag(AᵀA))", f64::NEG_INFINITY, mu1_excess, 0.0, slack),
        BoundCheck::new("μ₂", f64::NEG_INFINITY, mu[inst.n], 0.0, slack),
        BoundCheck::new("Σμ − ⟨X, G_f⟩", 0.0, mu_gap, 0.0, slack),
    ])
}

/// Primal and dual energy inequalities of the super-resolution SDP:
/// `N m ≤ ‖T(u)‖ < N Σ|c|`, `(N + 1) m ≤ ‖X‖ < (N + 1) Σ|c|`,
/// `1/(4N) + 1/4 ≤ ‖Λ‖² ≤ 5/2` and `λ₂ = −1/2`, with `m` the mean amplitude.
pub fn sr_bound_checks(
    inst: &SrInstance,
    x: &DenseHermitian<Complex64>,
    lambda: &DenseHermitian<Complex64>,
    slack: f64,
    lambda2_tol: f64,
) -> Vec<BoundCheck> {
    let n = inst.n as f64;
    let (m, sum) = (inst.mean_amplitude(), inst.amplitude_sum());
    let t_norm = x.top_left(inst.n).norm();
    vec![
        BoundCheck::new("‖T(u)‖", n * m, t_norm, n * sum, slack),
        BoundCheck::new("‖X‖", (n + 1.0) * m, x.norm(), (n + 1.0) * sum, slack),
        BoundCheck::new("‖Λ‖²", 0.25 / n + 0.25, lambda.norm_sq(), 2.5, slack),
        BoundCheck::new("λ₂", -0.5, lambda.get(inst.n, inst.n).re, -0.5, lambda2_tol),
    ]
}
