//! DRS, ADMM, primal–dual (PD) and primal–dual-fixed-point (PDF) iterations
//! driven by extended proximal operators, plus the fixed-point rate monitor.
//!
//! All four schemes are rewritings of the same 4-point iteration
//!
//! ```text
//! x^{k+1} = Prox_f^S(2 S z^k − ψ^k)
//! ψ^{k+1} = S x^{k+1} + (S*)⁻¹ λ^k
//! z^{k+1} = Prox_g^S(ψ^{k+1})
//! λ^{k+1} = S*(ψ^{k+1} − S z^{k+1})
//! ```
//!
//! so under matched initializations they produce the same `ψ`-sequence. Every
//! scheme reports the quadruple `(x^{k+1}, z^k, λ^k, ψ^{k+1})` per step; the
//! driver records `‖ψ^{k+1} − ψ^k‖²` and the optimality residual
//! `‖x^{k+1} − z^k‖`, which vanishes exactly at a solution.

use std::fmt::Write as _;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::Point;
use crate::params::OperatorParam;
use crate::prox::ProxPair;

/// Norm above which an iterate is treated as divergent.
pub const DIVERGENCE_NORM: f64 = 1e12;

/// Header line of the trace CSV export.
pub const TRACE_HEADER: &str = "# proxsplit-trace v1";

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "eps", rename_all = "kebab-case")]
pub enum StopCriterion {
    /// `‖x^{k+1} − z^k‖ ≤ eps`.
    Optimality(f64),
    /// `‖ψ^{k+1} − ψ^k‖ ≤ eps`.
    FixedPoint(f64),
    /// MSE against the reference `< eps`; needs a reference.
    Mse(f64),
    /// Run exactly `max_iters` iterations.
    Never,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct StopRule {
    pub max_iters: usize,
    pub criterion: StopCriterion,
}

impl Default for StopRule {
    fn default() -> Self {
        Self { max_iters: 100_000, criterion: StopCriterion::Optimality(1e-8) }
    }
}

impl StopRule {
    pub fn optimality(eps: f64, max_iters: usize) -> Self {
        Self { max_iters, criterion: StopCriterion::Optimality(eps) }
    }

    pub fn mse(eps: f64, max_iters: usize) -> Self {
        Self { max_iters, criterion: StopCriterion::Mse(eps) }
    }

    pub fn iterations(max_iters: usize) -> Self {
        Self { max_iters, criterion: StopCriterion::Never }
    }
}

/// Run options beyond the stopping rule.
#[derive(Clone, Debug)]
pub struct SolveOptions<'a, V> {
    pub stop: StopRule,
    /// Reference solution for the MSE column and the MSE stop.
    pub reference: Option<&'a V>,
    /// Record wall-clock time; otherwise `elapsed_ms` is 0 so traces are
    /// reproducible byte for byte.
    pub timing: bool,
    /// Keep every `ψ^k` (memory grows with the run length).
    pub keep_psi: bool,
    /// Keep `(ψ^k, ψ^{k+1})` every this many steps, for cocoercivity
    /// estimation.
    pub sample_every: Option<usize>,
}

impl<'a, V> SolveOptions<'a, V> {
    pub fn new(stop: StopRule) -> Self {
        Self { stop, reference: None, timing: false, keep_psi: false, sample_every: None }
    }

    pub fn with_reference(mut self, reference: &'a V) -> Self {
        self.reference = Some(reference);
        self
    }

    pub fn with_timing(mut self, timing: bool) -> Self {
        self.timing = timing;
        self
    }

    pub fn keep_psi(mut self) -> Self {
        self.keep_psi = true;
        self
    }

    pub fn sample_every(mut self, stride: usize) -> Self {
        self.sample_every = Some(stride.max(1));
        self
    }
}

/// One step of the 4-point form: `x^{k+1}`, `z^k`, `λ^k`, `ψ^{k+1}`, with
/// `k + 1` iterations completed.
#[derive(Clone, Debug, PartialEq)]
pub struct SplitState<V> {
    pub x: V,
    pub z: V,
    pub lambda: V,
    pub psi: V,
    pub k: usize,
}

/// `‖X^{k+1} − Z^k‖`.
pub fn optimality_residual<V: Point>(state: &SplitState<V>) -> f64 {
    state.x.minus(&state.z).norm()
}

/// Mean squared entry error `‖X − X_ref‖² / #entries`.
pub fn mse<V: Point>(x: &V, reference: &V) -> f64 {
    x.minus(reference).norm_sq() / x.entry_count() as f64
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TraceRecord {
    /// Zero-based step index; the record describes `ψ^{k+1} − ψ^k`.
    pub k: usize,
    pub fp_residual_sq: f64,
    pub opt_residual: f64,
    pub mse: Option<f64>,
    pub elapsed_ms: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StopStatus {
    Converged,
    MaxIterations,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceTrace {
    pub records: Vec<TraceRecord>,
    pub status: StopStatus,
    /// `‖ψ_final − ψ⁰‖²`, the anchor of the rate bound with the final iterate
    /// standing in for the fixed point.
    pub anchor_sq: f64,
    /// Largest `‖ψ^k‖` seen, the scale for floating-point slack.
    pub psi_scale: f64,
}

impl ConvergenceTrace {
    /// Number of iterations performed.
    pub fn iterations(&self) -> usize {
        self.records.len()
    }

    pub fn last(&self) -> Option<&TraceRecord> {
        self.records.last()
    }

    /// Absolute rounding slack on `‖ψ^{k+1} − ψ^k‖`.
    pub fn rounding_slack(&self) -> f64 {
        1e3 * f64::EPSILON * self.psi_scale.max(1.0)
    }

    /// First `k` with `‖ψ^{k+2} − ψ^{k+1}‖ > ‖ψ^{k+1} − ψ^k‖` beyond rounding
    /// slack; `None` for a non-increasing sequence.
    pub fn first_increase(&self) -> Option<usize> {
        let delta = self.rounding_slack();
        self.records.windows(2).find_map(|w| {
            let prev = w[0].fp_residual_sq.sqrt();
            let next = w[1].fp_residual_sq.sqrt();
            (next > prev + delta).then_some(w[1].k)
        })
    }

    /// First iteration count at which the MSE drops below `eps`.
    pub fn iterations_to_mse(&self, eps: f64) -> Option<usize> {
        self.records.iter().position(|r| r.mse.is_some_and(|m| m < eps)).map(|i| i + 1)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::with_capacity(64 * (self.records.len() + 2));
        out.push_str(TRACE_HEADER);
        out.push_str("\nk,fp_residual_sq,opt_residual,mse,elapsed_ms\n");
        for r in &self.records {
            let mse = r.mse.map(|m| format!("{m:e}")).unwrap_or_default();
            let _ = writeln!(out, "{},{:e},{:e},{},{}", r.k, r.fp_residual_sq, r.opt_residual, mse, r.elapsed_ms);
        }
        out
    }
}

/// Result of a solver run.
#[derive(Clone, Debug)]
pub struct SplitRun<V> {
    pub state: SplitState<V>,
    pub trace: ConvergenceTrace,
    /// `ψ⁰, ψ¹, …` when requested.
    pub psi_history: Vec<V>,
    /// `(ψ^k, ψ^{k+1})` pairs, i.e. points and their images under the DRS map.
    pub map_samples: Vec<(V, V)>,
}

trait Scheme<V> {
    fn step(&mut self) -> Result<SplitState<V>>;
}

fn prox_f<V: Point>(pair: &ProxPair<V>, s: &OperatorParam, v: &V) -> Result<V> {
    pair.f.prox(s, v)
}

fn prox_g<V: Point>(pair: &ProxPair<V>, s: &OperatorParam, v: &V) -> Result<V> {
    pair.g.prox(s, v)
}

struct Drs<'a, V: Point> {
    pair: &'a ProxPair<V>,
    s: &'a OperatorParam,
    psi: V,
    k: usize,
}

impl<V: Point> Scheme<V> for Drs<'_, V> {
    fn step(&mut self) -> Result<SplitState<V>> {
        let (pair, s) = (self.pair, self.s);
        let z = prox_g(pair, s, &self.psi)?;
        let sz = s.apply(&z)?;
        let lambda = s.adjoint(&self.psi.minus(&sz))?;
        let x = prox_f(pair, s, &sz.lin_comb(2.0, &self.psi, -1.0))?;
        let psi = s.apply(&x)?.plus(&self.psi).minus(&sz);
        self.psi = psi.clone();
        self.k += 1;
        Ok(SplitState { x, z, lambda, psi, k: self.k })
    }
}

struct Admm<'a, V: Point> {
    pair: &'a ProxPair<V>,
    s: &'a OperatorParam,
    z: V,
    lambda: V,
    k: usize,
}

impl<V: Point> Scheme<V> for Admm<'_, V> {
    fn step(&mut self) -> Result<SplitState<V>> {
        let (pair, s) = (self.pair, self.s);
        let dual = s.adjoint_inverse(&self.lambda)?;
        let x = prox_f(pair, s, &s.apply(&self.z)?.minus(&dual))?;
        let psi = s.apply(&x)?.plus(&dual);
        let z_next = prox_g(pair, s, &psi)?;
        let lambda_next = self.lambda.plus(&s.gram(&x.minus(&z_next))?);
        let z = std::mem::replace(&mut self.z, z_next);
        let lambda = std::mem::replace(&mut self.lambda, lambda_next);
        self.k += 1;
        Ok(SplitState { x, z, lambda, psi, k: self.k })
    }
}

struct Pd<'a, V: Point> {
    pair: &'a ProxPair<V>,
    s: &'a OperatorParam,
    dual_param: OperatorParam,
    x: V,
    lambda: V,
    lambda_prev: V,
    k: usize,
}

impl<V: Point> Scheme<V> for Pd<'_, V> {
    fn step(&mut self) -> Result<SplitState<V>> {
        let (pair, s) = (self.pair, self.s);
        let conj = pair
            .g_conjugate
            .as_ref()
            .ok_or_else(|| Error::InvalidParameter("primal-dual iteration needs the conjugate prox of g".into()))?;
        let shift = self.lambda_prev.lin_comb(1.0, &self.lambda, -2.0);
        let x = prox_f(pair, s, &s.apply(&self.x)?.plus(&s.adjoint_inverse(&shift)?))?;
        let psi = s.apply(&x)?.plus(&s.adjoint_inverse(&self.lambda)?);
        let lambda_next = conj.prox(&self.dual_param, &psi)?;
        // S z^k = S x^k + (S*)⁻¹(λ^{k−1} − λ^k)
        let z = self.x.plus(&s.gram_inverse(&self.lambda_prev.minus(&self.lambda))?);
        self.x = x.clone();
        let lambda = std::mem::replace(&mut self.lambda, lambda_next);
        self.lambda_prev = lambda.clone();
        self.k += 1;
        Ok(SplitState { x, z, lambda, psi, k: self.k })
    }
}

struct Pdf<'a, V: Point> {
    pair: &'a ProxPair<V>,
    s: &'a OperatorParam,
    psi: V,
    lambda: V,
    z: V,
    k: usize,
}

impl<V: Point> Scheme<V> for Pdf<'_, V> {
    fn step(&mut self) -> Result<SplitState<V>> {
        let (pair, s) = (self.pair, self.s);
        let dual = s.adjoint_inverse(&self.lambda)?;
        let x = prox_f(pair, s, &self.psi.lin_comb(1.0, &dual, -2.0))?;
        let psi = s.apply(&x)?.plus(&dual);
        let z_next = prox_g(pair, s, &psi)?;
        let lambda_next = s.adjoint(&psi.minus(&s.apply(&z_next)?))?;
        self.psi = psi.clone();
        let z = std::mem::replace(&mut self.z, z_next);
        let lambda = std::mem::replace(&mut self.lambda, lambda_next);
        self.k += 1;
        Ok(SplitState { x, z, lambda, psi, k: self.k })
    }
}

fn check_finite<V: Point>(v: &V, what: &str) -> Result<()> {
    if !v.is_finite() {
        return Err(Error::InvalidParameter(format!("{what} has non-finite entries")));
    }
    Ok(())
}

fn drive<V: Point>(scheme: &mut dyn Scheme<V>, psi0: V, opts: &SolveOptions<'_, V>) -> Result<SplitRun<V>> {
    let stop = opts.stop;
    if stop.max_iters == 0 {
        return Err(Error::InvalidParameter("max_iters must be positive".into()));
    }
    if matches!(stop.criterion, StopCriterion::Mse(_)) && opts.reference.is_none() {
        return Err(Error::InvalidParameter("an MSE stop needs a reference solution".into()));
    }
    let start = Instant::now();
    let mut records = Vec::new();
    let mut psi_history = Vec::new();
    let mut map_samples = Vec::new();
    if opts.keep_psi {
        psi_history.push(psi0.clone());
    }
    let mut psi_scale = psi0.norm();
    let mut prev = psi0.clone();
    let mut status = StopStatus::MaxIterations;
    let mut state = None;
    for k in 0..stop.max_iters {
        let st = scheme.step()?;
        let psi_norm = st.psi.norm();
        if !st.psi.is_finite() || !st.x.is_finite() || !psi_norm.is_finite() {
            return Err(Error::Diverged { iteration: k + 1, reason: "non-finite iterate".into() });
        }
        if psi_norm > DIVERGENCE_NORM {
            return Err(Error::Diverged { iteration: k + 1, reason: format!("‖ψ‖ = {psi_norm:e} exceeds {DIVERGENCE_NORM:e}") });
        }
        psi_scale = psi_scale.max(psi_norm);
        let fp_residual_sq = st.psi.minus(&prev).norm_sq();
        let opt_residual = optimality_residual(&st);
        let mse_val = opts.reference.map(|r| mse(&st.x, r));
        let elapsed_ms = if opts.timing { start.elapsed().as_secs_f64() * 1e3 } else { 0.0 };
        records.push(TraceRecord { k, fp_residual_sq, opt_residual, mse: mse_val, elapsed_ms });
        if let Some(stride) = opts.sample_every {
            if k % stride == 0 {
                map_samples.push((prev.clone(), st.psi.clone()));
            }
        }
        if opts.keep_psi {
            psi_history.push(st.psi.clone());
        }
        prev = st.psi.clone();
        let done = match stop.criterion {
            StopCriterion::Optimality(eps) => opt_residual <= eps,
            StopCriterion::FixedPoint(eps) => fp_residual_sq.sqrt() <= eps,
            StopCriterion::Mse(eps) => mse_val.is_some_and(|m| m < eps),
            StopCriterion::Never => false,
        };
        state = Some(st);
        if done {
            status = StopStatus::Converged;
            break;
        }
    }
    let state = state.expect("at least one iteration ran");
    let anchor_sq = state.psi.minus(&psi0).norm_sq();
    Ok(SplitRun {
        state,
        trace: ConvergenceTrace { records, status, anchor_sq, psi_scale },
        psi_history,
        map_samples,
    })
}

/// Douglas–Rachford splitting from `ψ⁰`:
/// `y = Prox_g^S(ψ^k)`, `ψ^{k+1} = S Prox_f^S(2 S y − ψ^k) + ψ^k − S y`.
pub fn run_drs<V: Point>(
    pair: &ProxPair<V>,
    s: &OperatorParam,
    psi0: &V,
    opts: &SolveOptions<'_, V>,
) -> Result<SplitRun<V>> {
    check_finite(psi0, "ψ⁰")?;
    let mut scheme = Drs { pair, s, psi: psi0.clone(), k: 0 };
    drive(&mut scheme, psi0.clone(), opts)
}

/// ADMM in the extended-prox form:
/// `x = Prox_f^S(S z − (S*)⁻¹λ)`, `z = Prox_g^S(S x + (S*)⁻¹λ)`,
/// `λ += S*S(x − z)`.
pub fn run_admm<V: Point>(
    pair: &ProxPair<V>,
    s: &OperatorParam,
    z0: &V,
    lambda0: &V,
    opts: &SolveOptions<'_, V>,
) -> Result<SplitRun<V>> {
    check_finite(z0, "z⁰")?;
    check_finite(lambda0, "λ⁰")?;
    let psi0 = s.apply(z0)?.plus(&s.adjoint_inverse(lambda0)?);
    let mut scheme = Admm { pair, s, z: z0.clone(), lambda: lambda0.clone(), k: 0 };
    drive(&mut scheme, psi0, opts)
}

/// Primal–dual iteration:
/// `x^{k+1} = Prox_f^S(S x^k + (S*)⁻¹(λ^{k−1} − 2λ^k))`,
/// `λ^{k+1} = Prox_{g*}^{(S*)⁻¹}(S x^{k+1} + (S*)⁻¹λ^k)`.
/// Requires `pair.g_conjugate`.
pub fn run_pd<V: Point>(
    pair: &ProxPair<V>,
    s: &OperatorParam,
    x0: &V,
    lambda_prev: &V,
    lambda0: &V,
    opts: &SolveOptions<'_, V>,
) -> Result<SplitRun<V>> {
    check_finite(x0, "x⁰")?;
    check_finite(lambda_prev, "λ⁻¹")?;
    check_finite(lambda0, "λ⁰")?;
    if pair.g_conjugate.is_none() {
        return Err(Error::InvalidParameter("primal-dual iteration needs the conjugate prox of g".into()));
    }
    let psi0 = s.apply(x0)?.plus(&s.adjoint_inverse(lambda_prev)?);
    let mut scheme = Pd {
        pair,
        s,
        dual_param: s.adjoint_inverse_param(),
        x: x0.clone(),
        lambda: lambda0.clone(),
        lambda_prev: lambda_prev.clone(),
        k: 0,
    };
    drive(&mut scheme, psi0, opts)
}

/// Primal–dual fixed-point iteration:
/// `x = Prox_f^S(ψ − 2(S*)⁻¹λ)`, `ψ' = S x + (S*)⁻¹λ`,
/// `λ' = S*(ψ' − S Prox_g^S(ψ'))`.
pub fn run_pdf<V: Point>(
    pair: &ProxPair<V>,
    s: &OperatorParam,
    psi0: &V,
    lambda0: &V,
    opts: &SolveOptions<'_, V>,
) -> Result<SplitRun<V>> {
    check_finite(psi0, "ψ⁰")?;
    check_finite(lambda0, "λ⁰")?;
    // S z⁰ = ψ⁰ − (S*)⁻¹λ⁰
    let z0 = s.inverse(&psi0.minus(&s.adjoint_inverse(lambda0)?))?;
    let mut scheme = Pdf { pair, s, psi: psi0.clone(), lambda: lambda0.clone(), z: z0, k: 0 };
    drive(&mut scheme, psi0.clone(), opts)
}

/// `(z⁰, λ⁰)` making ADMM reproduce the DRS sequence started at `ψ⁰`.
pub fn matched_admm_init<V: Point>(pair: &ProxPair<V>, s: &OperatorParam, psi0: &V) -> Result<(V, V)> {
    let z0 = prox_g(pair, s, psi0)?;
    let lambda0 = s.adjoint(&psi0.minus(&s.apply(&z0)?))?;
    Ok((z0, lambda0))
}

/// `λ⁰` making PDF reproduce the DRS sequence started at `ψ⁰`.
pub fn matched_pdf_init<V: Point>(pair: &ProxPair<V>, s: &OperatorParam, psi0: &V) -> Result<V> {
    Ok(matched_admm_init(pair, s, psi0)?.1)
}

/// `(x⁰, λ⁻¹, λ⁰)` making PD reproduce the DRS sequence started at `ψ⁰`.
pub fn matched_pd_init<V: Point>(pair: &ProxPair<V>, s: &OperatorParam, psi0: &V) -> Result<(V, V, V)> {
    let (z0, lambda0) = matched_admm_init(pair, s, psi0)?;
    Ok((z0, lambda0.clone(), lambda0))
}

/// The four equivalent schemes.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Algorithm {
    Drs,
    Admm,
    Pd,
    Pdf,
}

impl Algorithm {
    pub const ALL: [Algorithm; 4] = [Algorithm::Drs, Algorithm::Admm, Algorithm::Pd, Algorithm::Pdf];

    pub fn name(self) -> &'static str {
        match self {
            Algorithm::Drs => "drs",
            Algorithm::Admm => "admm",
            Algorithm::Pd => "pd",
            Algorithm::Pdf => "pdf",
        }
    }
}

impl std::str::FromStr for Algorithm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Algorithm::ALL
            .into_iter()
            .find(|a| a.name() == s)
            .ok_or_else(|| Error::InvalidParameter(format!("unknown algorithm '{s}' (expected drs, admm, pd or pdf)")))
    }
}

/// Runs `algo` from the initialization matched to `ψ⁰`, so every choice
/// produces the same `ψ`-sequence.
pub fn run_algorithm<V: Point>(
    algo: Algorithm,
    pair: &ProxPair<V>,
    s: &OperatorParam,
    psi0: &V,
    opts: &SolveOptions<'_, V>,
) -> Result<SplitRun<V>> {
    match algo {
        Algorithm::Drs => run_drs(pair, s, psi0, opts),
        Algorithm::Admm => {
            let (z0, lambda0) = matched_admm_init(pair, s, psi0)?;
            run_admm(pair, s, &z0, &lambda0, opts)
        }
        Algorithm::Pd => {
            let (x0, lambda_prev, lambda0) = matched_pd_init(pair, s, psi0)?;
            run_pd(pair, s, &x0, &lambda_prev, &lambda0, opts)
        }
        Algorithm::Pdf => {
            let lambda0 = matched_pdf_init(pair, s, psi0)?;
            run_pdf(pair, s, psi0, &lambda0, opts)
        }
    }
}

/// One application of the DRS fixed-point map `ψ ↦ ψ⁺`.
pub fn drs_map<V: Point>(pair: &ProxPair<V>, s: &OperatorParam, psi: &V) -> Result<V> {
    Drs { pair, s, psi: psi.clone(), k: 0 }.step().map(|st| st.psi)
}

/// Sharp factor `a^k (1 − a)/(1 − a^{k+1})` with `a = L/(2 − L)`; equals
/// `1/(k + 1)` at `L = 1`.
pub fn rate_factor(l: f64, k: usize) -> f64 {
    let a = l / (2.0 - l);
    if (1.0 - a).abs() < 1e-12 {
        return 1.0 / (k as f64 + 1.0);
    }
    let ak = a.powi(k as i32);
    ak * (1.0 - a) / (1.0 - ak * a)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RateBound {
    pub l: f64,
    pub a: f64,
    /// `‖ψ* − ψ⁰‖²`, with `ψ*` proxied by the final iterate.
    pub anchor_sq: f64,
}

impl RateBound {
    pub fn new(l: f64, anchor_sq: f64) -> Result<Self> {
        if !(l > 0.0 && l <= 1.0) {
            return Err(Error::InvalidParameter(format!("cocoercivity constant must lie in (0, 1], got {l}")));
        }
        if !(anchor_sq >= 0.0 && anchor_sq.is_finite()) {
            return Err(Error::InvalidParameter(format!("anchor must be finite and non-negative, got {anchor_sq}")));
        }
        Ok(Self { l, a: l / (2.0 - l), anchor_sq })
    }

    /// The basic bound, `L = 1`, anchored on a trace.
    pub fn basic(trace: &ConvergenceTrace) -> Self {
        Self { l: 1.0, a: 1.0, anchor_sq: trace.anchor_sq }
    }

    pub fn at(&self, k: usize) -> f64 {
        rate_factor(self.l, k) * self.anchor_sq
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RateViolation {
    pub k: usize,
    pub residual_sq: f64,
    pub bound: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RateReport {
    pub bound: RateBound,
    pub checked: usize,
    pub first_violation: Option<RateViolation>,
    /// Largest `residual / bound` over the trace.
    pub max_ratio: f64,
    /// The fixed point is approximated by the final iterate.
    pub fixed_point_proxied: bool,
}

impl RateReport {
    pub fn holds(&self) -> bool {
        self.first_violation.is_none()
    }
}

/// Checks `‖ψ^{k+1} − ψ^k‖² ≤ factor(L, k) ‖ψ* − ψ⁰‖²` at every recorded `k`,
/// allowing rounding slack in the residual.
pub fn rate_check(trace: &ConvergenceTrace, bound: RateBound) -> RateReport {
    let delta = trace.rounding_slack();
    let mut first_violation = None;
    let mut max_ratio: f64 = 0.0;
    for r in &trace.records {
        let b = bound.at(r.k);
        if b > 0.0 {
            max_ratio = max_ratio.max(r.fp_residual_sq / b);
        }
        let allowed = (b.sqrt() + delta).powi(2);
        if first_violation.is_none() && r.fp_residual_sq > allowed {
            first_violation = Some(RateViolation { k: r.k, residual_sq: r.fp_residual_sq, bound: b });
        }
    }
    RateReport { bound, checked: trace.records.len(), first_violation, max_ratio, fixed_point_proxied: true }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CocoercivityEstimate {
    /// `max ‖Fy₁ − Fy₂‖² / ⟨Fy₁ − Fy₂, y₁ − y₂⟩` over usable pairs.
    pub raw: f64,
    /// `raw` clamped to `(0, 1]`.
    pub clamped: f64,
    pub pairs_used: usize,
}

/// Empirical cocoercivity constant from samples `(y, F y)` of a map `F`,
/// over all sample pairs. Pairs with coincident points or a non-positive
/// inner product are skipped.
pub fn estimate_cocoercivity<V: Point>(samples: &[(V, V)]) -> Result<CocoercivityEstimate> {
    let mut raw: f64 = 0.0;
    let mut used = 0;
    for i in 0..samples.len() {
        for j in i + 1..samples.len() {
            let dy = samples[i].0.minus(&samples[j].0);
            let df = samples[i].1.minus(&samples[j].1);
            let den = df.inner(&dy);
            let scale = dy.norm_sq();
            if scale == 0.0 || den <= 1e-14 * scale {
                continue;
            }
            raw = raw.max(df.norm_sq() / den);
            used += 1;
        }
    }
    if used == 0 {
        return Err(Error::Undefined("no pair of distinct samples to estimate cocoercivity".into()));
    }
    Ok(CocoercivityEstimate { raw, clamped: raw.clamp(f64::MIN_POSITIVE, 1.0), pairs_used: used })
}

#[cfg(test)]
mod tests {
    use nalgebra::DVector;
    use rand::Rng;

    use super::*;
    use crate::numerics::{seeded_rng, BlockShape, DenseHermitian};
    use crate::prox::{L1Norm, NsdIndicator, ProxOperator, PsdIndicator};

    fn cone_pair() -> ProxPair<DenseHermitian<f64>> {
        ProxPair::new(Box::new(PsdIndicator), Box::new(PsdIndicator)).with_conjugate(Box::new(NsdIndicator))
    }

    /// Indicator of the box [−1, 1]ⁿ.
    struct Box1;

    impl ProxOperator<DVector<f64>> for Box1 {
        fn prox(&self, s: &OperatorParam, v: &DVector<f64>) -> Result<DVector<f64>> {
            let w = s.inverse(v)?;
            Ok(w.map(|t| t.clamp(-1.0, 1.0)))
        }

        fn name(&self) -> &'static str {
            "box"
        }
    }

    #[test]
    fn fixed_immediately_on_cone_pair() {
        let psi0 = DenseHermitian::<f64>::from_real_diagonal(&[2.0, 1.0, 0.5]).unwrap();
        let run = run_drs(&cone_pair(), &OperatorParam::Identity, &psi0, &SolveOptions::new(StopRule::default())).unwrap();
        assert_eq!(run.trace.iterations(), 1);
        assert_eq!(run.trace.records[0].fp_residual_sq, 0.0);
        assert_eq!(optimality_residual(&run.state), 0.0);
        assert_eq!(run.trace.status, StopStatus::Converged);
    }

    #[test]
    fn admm_zero_init_is_optimal_on_cone_pair() {
        let zero = DenseHermitian::<f64>::zeros(3);
        let run =
            run_admm(&cone_pair(), &OperatorParam::Identity, &zero, &zero, &SolveOptions::new(StopRule::default())).unwrap();
        assert_eq!(run.trace.iterations(), 1);
        assert_eq!(optimality_residual(&run.state), 0.0);
    }

    #[test]
    fn max_iterations_status_and_mse_requires_reference() {
        let pair = ProxPair::new(Box::new(L1Norm) as Box<dyn ProxOperator<DVector<f64>>>, Box::new(Box1));
        let psi0 = DVector::from_vec(vec![5.0, -3.0, 0.2]);
        let run = run_drs(&pair, &OperatorParam::Identity, &psi0, &SolveOptions::new(StopRule::iterations(3))).unwrap();
        assert_eq!(run.trace.iterations(), 3);
        assert_eq!(run.trace.status, StopStatus::MaxIterations);
        let err = run_drs(&pair, &OperatorParam::Identity, &psi0, &SolveOptions::new(StopRule::mse(1e-6, 10)));
        assert!(err.is_err());
    }

    #[test]
    fn l1_box_problem_converges_to_zero() {
        // minimize ‖x‖₁ over the box: the solution is 0.
        let pair = ProxPair::new(Box::new(L1Norm) as Box<dyn ProxOperator<DVector<f64>>>, Box::new(Box1));
        let psi0 = DVector::from_vec(vec![5.0, -3.0, 0.2, 1.5]);
        for s in [OperatorParam::Identity, OperatorParam::scalar(0.5).unwrap(), OperatorParam::scalar(-2.0).unwrap()] {
            let run = run_drs(&pair, &s, &psi0, &SolveOptions::new(StopRule::optimality(1e-12, 1000))).unwrap();
            assert_eq!(run.trace.status, StopStatus::Converged, "{}", s.name());
            assert!(run.state.x.norm() < 1e-10);
            assert!(run.trace.first_increase().is_none());
        }
    }

    struct Expanding;

    impl ProxOperator<DVector<f64>> for Expanding {
        fn prox(&self, _: &OperatorParam, v: &DVector<f64>) -> Result<DVector<f64>> {
            Ok(v.scaled(1e3))
        }

        fn name(&self) -> &'static str {
            "expanding"
        }
    }

    #[test]
    fn divergence_guard_trips() {
        let pair = ProxPair::new(Box::new(Expanding) as Box<dyn ProxOperator<DVector<f64>>>, Box::new(Box1));
        let psi0 = DVector::from_vec(vec![5.0, -3.0]);
        let res = run_drs(&pair, &OperatorParam::Identity, &psi0, &SolveOptions::new(StopRule::iterations(50)));
        assert!(matches!(res, Err(Error::Diverged { .. })), "{res:?}");
    }

    fn random_state(rng: &mut impl Rng, n: usize) -> DenseHermitian<f64> {
        DenseHermitian::from_lower_fn(n, |_, _| rng.random::<f64>() * 2.0 - 1.0).unwrap()
    }

    #[test]
    fn four_point_invariant_holds() {
        let mut rng = seeded_rng(3);
        let shape = BlockShape::new(3, 1).unwrap();
        let s = OperatorParam::sdp_hadamard(1.7, 0.6, shape).unwrap();
        let g = random_state(&mut rng, 4);
        let pair = ProxPair::new(Box::new(crate::prox::LinearDiagOnes { objective: g }), Box::new(PsdIndicator));
        let psi0 = random_state(&mut rng, 4);
        let mut scheme = Drs { pair: &pair, s: &s, psi: psi0, k: 0 };
        for _ in 0..10 {
            let st = scheme.step().unwrap();
            let rebuilt = s.apply(&st.x).unwrap().plus(&s.adjoint_inverse(&st.lambda).unwrap());
            assert!(rebuilt.minus(&st.psi).norm() < 1e-10 * (1.0 + st.psi.norm()));
        }
    }

    #[test]
    fn rate_factor_values() {
        assert!((rate_factor(0.99, 20) - 0.038_703).abs() < 1e-6);
        assert!((rate_factor(0.99, 100) - 0.003_089_5).abs() < 1e-7);
        for k in [0, 1, 5, 50] {
            assert_eq!(rate_factor(1.0, k), 1.0 / (k as f64 + 1.0));
        }
        assert!(RateBound::new(0.0, 1.0).is_err());
        assert!(RateBound::new(1.5, 1.0).is_err());
        let b = RateBound::new(0.5, 2.0).unwrap();
        assert!((b.a - 1.0 / 3.0).abs() < 1e-15 && b.a <= b.l);
    }

    #[test]
    fn cocoercivity_of_simple_maps() {
        let pts: Vec<DVector<f64>> = (0..5).map(|i| DVector::from_vec(vec![i as f64, (i * i) as f64])).collect();
        let ident: Vec<_> = pts.iter().map(|p| (p.clone(), p.clone())).collect();
        let est = estimate_cocoercivity(&ident).unwrap();
        assert!((est.raw - 1.0).abs() < 1e-15);
        let half: Vec<_> = pts.iter().map(|p| (p.clone(), p.scaled(0.5))).collect();
        assert!((estimate_cocoercivity(&half).unwrap().clamped - 0.5).abs() < 1e-15);
        let same = vec![(pts[0].clone(), pts[0].clone()); 3];
        assert!(estimate_cocoercivity(&same).is_err());
    }

    #[test]
    fn csv_export_shape() {
        let pair = ProxPair::new(Box::new(L1Norm) as Box<dyn ProxOperator<DVector<f64>>>, Box::new(Box1));
        let psi0 = DVector::from_vec(vec![5.0, -3.0]);
        let run = run_drs(&pair, &OperatorParam::Identity, &psi0, &SolveOptions::new(StopRule::iterations(4))).unwrap();
        let csv = run.trace.to_csv();
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], TRACE_HEADER);
        assert_eq!(lines[1], "k,fp_residual_sq,opt_residual,mse,elapsed_ms");
        assert_eq!(lines.len(), 6);
        assert!(lines[2].starts_with("0,") && lines[2].ends_with(",,0"));
    }
}
