//! Experiment orchestration shared by the command-line tool and the
//! reproduction tests: problem setup, reference solves, parameter
//! resolution, single runs, concurrent sweeps and rate checks.

use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use proxsplit::apps::{
    gen_bqp, gen_sr, reference_solve, relative_difference, BqpInstance, Instance, ReferenceOptions,
    ReferenceSolution, SrInstance,
};
use proxsplit::numerics::{BlockShape, DenseHermitian, Field};
use proxsplit::params::OperatorParam;
use proxsplit::prox::ProxPair;
use proxsplit::splitting::{
    estimate_cocoercivity, rate_check, rate_factor, run_algorithm, Algorithm, CocoercivityEstimate, RateBound,
    RateReport, SolveOptions, SplitRun, StopRule, StopStatus,
};
use proxsplit::tuning::{
    acceleration_gain, bqp_estimate, optimal_scalar, sdp_joint_search, sdp_separate_choices, sr_estimate,
    BqpRegime, EstimateMode, GainReport, GridSpec, SdpChoice, SolutionPair,
};
use proxsplit::Result;

use crate::config::{App, InstanceSpec, ParamMode};

/// The three a-priori parameter recommendations of an instance.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Estimates {
    pub alpha: SdpChoice,
    pub beta: SdpChoice,
    pub joint: SdpChoice,
    /// Norm regime, for the Boolean quadratic program.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub regime: Option<BqpRegime>,
}

impl Estimates {
    pub fn choice(&self, mode: EstimateMode) -> SdpChoice {
        match mode {
            EstimateMode::Alpha => self.alpha,
            EstimateMode::Beta => self.beta,
            EstimateMode::Joint => self.joint,
        }
    }
}

/// A problem ready to be solved: prox pair, partition and estimates.
pub struct Problem<T: Field> {
    pub pair: ProxPair<DenseHermitian<T>>,
    pub shape: BlockShape,
    pub dim: usize,
    pub estimates: Estimates,
}

pub fn bqp_problem(inst: &BqpInstance) -> Result<Problem<f64>> {
    let est = bqp_estimate(&inst.a, &inst.b)?;
    Ok(Problem {
        pair: inst.prox_pair(),
        shape: inst.shape(),
        dim: inst.dim(),
        estimates: Estimates {
            alpha: est.choice(EstimateMode::Alpha),
            beta: est.choice(EstimateMode::Beta),
            joint: est.choice(EstimateMode::Joint),
            regime: Some(est.regime),
        },
    })
}

pub fn sr_problem(inst: &SrInstance) -> Result<Problem<Complex64>> {
    let est = sr_estimate(inst.n, inst.k, inst.sigma)?;
    Ok(Problem {
        pair: inst.prox_pair(),
        shape: inst.shape(),
        dim: inst.dim(),
        estimates: Estimates {
            alpha: est.choice(EstimateMode::Alpha),
            beta: est.choice(EstimateMode::Beta),
            joint: est.choice(EstimateMode::Joint),
            regime: None,
        },
    })
}

pub fn generate(app: App, spec: &InstanceSpec) -> Result<Instance> {
    Ok(match app {
        App::Bqp => Instance::Bqp(gen_bqp(spec.n, spec.k, spec.sigma_a, spec.sigma_b, spec.seed)?),
        App::Sr => Instance::Sr(gen_sr(spec.n, spec.k, spec.sigma, spec.obs_frac, spec.seed)?),
    })
}

/// The second parameter a reference is recomputed with.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CrossCheck {
    pub param: OperatorParam,
    pub iterations: usize,
    pub converged: bool,
    /// `‖X_a − X_b‖_F / ‖X_b‖_F` between the two solves.
    pub relative_difference: f64,
}

/// A reference solution with its cross-validation.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound(serialize = "T: Field", deserialize = "T: Field"))]
pub struct ReferenceRecord<T: Field> {
    pub solution: ReferenceSolution<T>,
    pub cross_check: CrossCheck,
}

/// Parameter after resolving a mode.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResolvedParam {
    pub label: String,
    pub alpha: f64,
    pub beta: f64,
    pub param: OperatorParam,
}

/// One row of a sweep, in grid order.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub alpha: f64,
    pub beta: f64,
    pub iterations: usize,
    pub reached: bool,
    pub final_mse: Option<f64>,
    /// `‖ψ^{k+1} − ψ^k‖² ≤ ‖ψ_final − ψ⁰‖²/(k+1)` at every step.
    pub basic_bound_holds: bool,
    /// The fixed-point residual never increased.
    pub monotone: bool,
    /// Set when the cell failed (e.g. diverged) instead of finishing.
    pub error: Option<String>,
}

/// `(L, k, sharp factor, basic factor)` for the calibration table.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Calibration {
    pub l: f64,
    pub k: usize,
    pub sharp: f64,
    pub basic: f64,
}

pub fn calibration_table() -> Vec<Calibration> {
    [(0.99, 20), (0.99, 100)]
        .into_iter()
        .map(|(l, k)| Calibration { l, k, sharp: rate_factor(l, k), basic: 1.0 / (k as f64 + 1.0) })
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RateCheckReport {
    pub iterations: usize,
    pub status: StopStatus,
    pub cocoercivity: CocoercivityEstimate,
    /// Bound with `L = 1`.
    pub basic: RateReport,
    /// Bound with the estimated `L̂`.
    pub sharp: RateReport,
    pub monotone: bool,
    pub first_increase: Option<usize>,
    pub calibration: Vec<Calibration>,
}

impl RateCheckReport {
    pub fn holds(&self) -> bool {
        self.basic.holds() && self.sharp.holds() && self.monotone
    }
}

/// Number of `(ψ, Fψ)` samples kept for the cocoercivity estimate.
const COCOERCIVITY_SAMPLES: usize = 64;

impl<T: Field> Problem<T> {
    fn zeros(&self) -> DenseHermitian<T> {
        DenseHermitian::zeros(self.dim)
    }

    pub fn param(&self, choice: SdpChoice) -> Result<OperatorParam> {
        choice.to_param(self.shape)
    }

    /// DRS reference under the joint estimate, recomputed under a second
    /// parameter for cross-validation.
    pub fn reference(&self, opts: ReferenceOptions) -> Result<ReferenceRecord<T>> {
        let e = self.estimates;
        let primary = self.param(e.joint)?;
        let secondary = if e.alpha != e.joint {
            self.param(e.alpha)?
        } else {
            self.param(SdpChoice { alpha: 2.0 * e.joint.alpha, beta: e.joint.beta })?
        };
        let solution = reference_solve(&self.pair, &primary, self.dim, opts)?;
        let other = reference_solve(&self.pair, &secondary, self.dim, opts)?;
        let cross_check = CrossCheck {
            relative_difference: relative_difference(&other.x, &solution.x),
            iterations: other.iterations,
            converged: other.converged,
            param: secondary,
        };
        Ok(ReferenceRecord { solution, cross_check })
    }

    pub fn solution_pair(&self, reference: &ReferenceSolution<T>) -> Result<SolutionPair<DenseHermitian<T>>> {
        Ok(SolutionPair::new(reference.x.clone(), reference.lambda.clone())?.with_shape(self.shape))
    }

    /// The parameter a mode selects. Optimal modes read the reference
    /// solution; estimates and manual choices do not.
    pub fn resolve(&self, mode: &ParamMode, reference: &ReferenceSolution<T>) -> Result<ResolvedParam> {
        let sdp = |label: &str, c: SdpChoice| -> Result<ResolvedParam> {
            Ok(ResolvedParam { label: label.into(), alpha: c.alpha, beta: c.beta, param: self.param(c)? })
        };
        match mode {
            ParamMode::Identity => {
                Ok(ResolvedParam { label: "identity".into(), alpha: 1.0, beta: 1.0, param: OperatorParam::Identity })
            }
            ParamMode::ScalarOpt => {
                let a = optimal_scalar(&self.solution_pair(reference)?)?;
                Ok(ResolvedParam { label: "scalar-opt".into(), alpha: a, beta: 1.0, param: OperatorParam::scalar(a)? })
            }
            ParamMode::DiagOpt => Err(proxsplit::Error::InvalidParameter(
                "diagonal optimum needs a vector problem".into(),
            )),
            ParamMode::SdpSeparateAlpha => {
                let (a, _) = sdp_separate_choices(&self.solution_pair(reference)?)?;
                sdp("sdp-separate-alpha", SdpChoice { alpha: a, beta: 1.0 })
            }
            ParamMode::SdpSeparateBeta => {
                let (_, b) = sdp_separate_choices(&self.solution_pair(reference)?)?;
                sdp("sdp-separate-beta", SdpChoice { alpha: 1.0, beta: b })
            }
            ParamMode::SdpJointOpt => {
                let j = sdp_joint_search(&self.solution_pair(reference)?, &GridSpec::default())?;
                sdp("sdp-joint-opt", j.choice)
            }
            ParamMode::Estimate(which) => {
                let label = match which {
                    EstimateMode::Alpha => "estimate-alpha",
                    EstimateMode::Beta => "estimate-beta",
                    EstimateMode::Joint => "estimate-joint",
                };
                sdp(label, self.estimates.choice(*which))
            }
            ParamMode::Manual { alpha, beta } => sdp("manual", SdpChoice { alpha: *alpha, beta: *beta }),
            ParamMode::Sweep { .. } => Err(proxsplit::Error::InvalidParameter(
                "a sweep has no single parameter".into(),
            )),
        }
    }

    pub fn gain(&self, param: &OperatorParam, reference: &ReferenceSolution<T>) -> Result<GainReport> {
        acceleration_gain(param, &self.solution_pair(reference)?)
    }

    /// Solves from `ψ⁰ = 0` until the MSE against `reference` drops below
    /// `mse_eps` or `max_iters` is hit.
    pub fn run_to_threshold(
        &self,
        param: &OperatorParam,
        algo: Algorithm,
        reference: &DenseHermitian<T>,
        mse_eps: f64,
        max_iters: usize,
        timing: bool,
    ) -> Result<SplitRun<DenseHermitian<T>>> {
        let opts = SolveOptions::new(StopRule::mse(mse_eps, max_iters)).with_reference(reference).with_timing(timing);
        run_algorithm(algo, &self.pair, param, &self.zeros(), &opts)
    }

    pub fn sweep_cell(
        &self,
        alpha: f64,
        beta: f64,
        algo: Algorithm,
        reference: &DenseHermitian<T>,
        mse_eps: f64,
        max_iters: usize,
    ) -> SweepRow {
        let outcome = self
            .param(SdpChoice { alpha, beta })
            .and_then(|p| self.run_to_threshold(&p, algo, reference, mse_eps, max_iters, false));
        match outcome {
            Ok(run) => SweepRow {
                alpha,
                beta,
                iterations: run.trace.iterations(),
                reached: run.trace.status == StopStatus::Converged,
                final_mse: run.trace.last().and_then(|r| r.mse),
                basic_bound_holds: rate_check(&run.trace, RateBound::basic(&run.trace)).holds(),
                monotone: run.trace.first_increase().is_none(),
                error: None,
            },
            Err(e) => SweepRow {
                alpha,
                beta,
                iterations: 0,
                reached: false,
                final_mse: None,
                basic_bound_holds: false,
                monotone: false,
                error: Some(e.to_string()),
            },
        }
    }

    /// Runs every `(α, β)` cell with up to `jobs` worker threads; rows come
    /// back in the order of `cells` whatever the completion order.
    pub fn sweep(
        &self,
        cells: &[(f64, f64)],
        algo: Algorithm,
        reference: &DenseHermitian<T>,
        mse_eps: f64,
        max_iters: usize,
        jobs: usize,
    ) -> Vec<SweepRow> {
        let next = AtomicUsize::new(0);
        let slots: Mutex<Vec<Option<SweepRow>>> = Mutex::new(vec![None; cells.len()]);
        std::thread::scope(|scope| {
            for _ in 0..jobs.clamp(1, cells.len().max(1)) {
                scope.spawn(|| loop {
                    let i = next.fetch_add(1, Ordering::Relaxed);
                    let Some(&(a, b)) = cells.get(i) else { break };
                    let row = self.sweep_cell(a, b, algo, reference, mse_eps, max_iters);
                    slots.lock().expect("sweep worker panicked")[i] = Some(row);
                });
            }
        });
        slots.into_inner().expect("sweep worker panicked").into_iter().map(|r| r.expect("cell ran")).collect()
    }

    /// Solves to threshold, then checks the basic and the sharp rate bound
    /// (with the empirical `L̂`) and monotonicity along the trace. The run is
    /// repeated once to sample the map evenly across its length; both passes
    /// are deterministic and identical.
    pub fn rate_check(
        &self,
        param: &OperatorParam,
        algo: Algorithm,
        reference: &DenseHermitian<T>,
        mse_eps: f64,
        max_iters: usize,
        timing: bool,
    ) -> Result<(SplitRun<DenseHermitian<T>>, RateCheckReport)> {
        let first = self.run_to_threshold(param, algo, reference, mse_eps, max_iters, timing)?;
        let stride = (first.trace.iterations() / COCOERCIVITY_SAMPLES).max(1);
        let opts = SolveOptions::new(StopRule::mse(mse_eps, max_iters))
            .with_reference(reference)
            .sample_every(stride);
        let sampled = run_algorithm(algo, &self.pair, param, &self.zeros(), &opts)?;
        let cocoercivity = estimate_cocoercivity(&sampled.map_samples)?;
        let trace = &first.trace;
        let basic = rate_check(trace, RateBound::basic(trace));
        let sharp = rate_check(trace, RateBound::new(cocoercivity.clamped, trace.anchor_sq)?);
        let first_increase = trace.first_increase();
        let report = RateCheckReport {
            iterations: trace.iterations(),
            status: trace.status,
            cocoercivity,
            basic,
            sharp,
            monotone: first_increase.is_none(),
            first_increase,
            calibration: calibration_table(),
        };
        Ok((first, report))
    }
}

/// A problem of either field.
pub enum AnyProblem {
    Bqp(Problem<f64>),
    Sr(Problem<Complex64>),
}

impl AnyProblem {
    pub fn new(instance: &Instance) -> Result<Self> {
        Ok(match instance {
            Instance::Bqp(i) => AnyProblem::Bqp(bqp_problem(i)?),
            Instance::Sr(i) => AnyProblem::Sr(sr_problem(i)?),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn calibration_values() {
        let t = calibration_table();
        assert!((t[0].sharp - 0.0387).abs() / 0.0387 < 0.02);
        assert!((t[1].sharp - 0.0031).abs() / 0.0031 < 0.02);
        assert!((t[0].basic - 1.0 / 21.0).abs() < 1e-15);
    }

    fn small_bqp() -> (BqpInstance, Problem<f64>) {
        let inst = gen_bqp(6, 8, 0.3, 1.0, 5).unwrap();
        let p = bqp_problem(&inst).unwrap();
        (inst, p)
    }

    #[test]
    fn sweep_rows_follow_grid_order() {
        let (_, p) = small_bqp();
        let r = p.reference(ReferenceOptions::default()).unwrap();
        let cells: Vec<(f64, f64)> = [0.3, 1.0, 3.0].iter().flat_map(|&a| [0.5, 2.0].map(|b| (a, b))).collect();
        let parallel = p.sweep(&cells, Algorithm::Drs, &r.solution.x, 1e-6, 20_000, 4);
        let serial = p.sweep(&cells, Algorithm::Drs, &r.solution.x, 1e-6, 20_000, 1);
        assert_eq!(parallel, serial);
        for (row, &(a, b)) in parallel.iter().zip(&cells) {
            assert_eq!((row.alpha, row.beta), (a, b));
            assert!(row.reached && row.error.is_none());
        }
    }

    #[test]
    fn manual_unit_parameter_reproduces_identity() {
        let (_, p) = small_bqp();
        let r = p.reference(ReferenceOptions::default()).unwrap();
        let id = p.resolve(&ParamMode::Identity, &r.solution).unwrap();
        let unit = p.resolve(&ParamMode::Manual { alpha: 1.0, beta: 1.0 }, &r.solution).unwrap();
        let a = p.run_to_threshold(&id.param, Algorithm::Drs, &r.solution.x, 1e-6, 10_000, false).unwrap();
        let b = p.run_to_threshold(&unit.param, Algorithm::Drs, &r.solution.x, 1e-6, 10_000, false).unwrap();
        assert_eq!(a.trace.to_csv(), b.trace.to_csv());
    }

    #[test]
    fn diag_opt_is_rejected_for_matrices() {
        let (_, p) = small_bqp();
        let r = p.reference(ReferenceOptions::default()).unwrap();
        assert!(p.resolve(&ParamMode::DiagOpt, &r.solution).is_err());
    }

    #[test]
    fn rate_check_on_small_instance() {
        let (_, p) = small_bqp();
        let r = p.reference(ReferenceOptions::default()).unwrap();
        let s = p.param(p.estimates.joint).unwrap();
        let (_, report) = p.rate_check(&s, Algorithm::Drs, &r.solution.x, 1e-8, 20_000, false).unwrap();
        assert!(report.holds(), "{report:?}");
        assert!(report.cocoercivity.clamped <= 1.0);
    }
}
