//! Randomized invariants of the parameter algebra, the proximal evaluators,
//! the splitting map and the tuning formulas.

use nalgebra::DVector;
use num_complex::Complex64;
use proptest::prelude::*;
use rand::Rng;

use proxsplit::numerics::{project_psd, project_toeplitz, seeded_rng, BlockShape, DenseHermitian};
use proxsplit::params::OperatorParam;
use proxsplit::prox::{
    firm_nonexpansiveness_gap, moreau_residual, FixedEntrySet, L1Norm, LinearDiagOnes, LinearToeplitzFixed,
    NsdIndicator, ProxOperator, ProxPair, PsdIndicator,
};
use proxsplit::splitting::{drs_map, estimate_cocoercivity, rate_factor};
use proxsplit::tuning::{objective, optimal_diagonal, optimal_scalar, sdp_separate_choices, SolutionPair};

fn sym(n: usize, seed: u64, scale: f64) -> DenseHermitian<f64> {
    let mut rng = seeded_rng(seed);
    DenseHermitian::from_lower_fn(n, |_, _| scale * (rng.random::<f64>() * 2.0 - 1.0)).unwrap()
}

fn herm(n: usize, seed: u64) -> DenseHermitian<Complex64> {
    let mut rng = seeded_rng(seed);
    DenseHermitian::from_lower_fn(n, |_, _| Complex64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5))
        .unwrap()
}

fn log_uniform() -> impl Strategy<Value = f64> {
    (-2.0f64..2.0).prop_map(|e| 10f64.powf(e))
}

fn shape() -> impl Strategy<Value = BlockShape> {
    (1usize..5, 1usize..4).prop_map(|(n, k)| BlockShape::new(n, k).unwrap())
}

fn rel(a: &DenseHermitian<f64>, b: &DenseHermitian<f64>) -> f64 {
    a.minus(b).norm() / b.norm().max(1e-300)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn parameter_round_trips(alpha in log_uniform(), beta in log_uniform(), sh in shape(), seed in any::<u64>()) {
        let s = OperatorParam::sdp_hadamard(alpha, beta, sh).unwrap();
        let v = sym(sh.total(), seed, 1.0);
        let back = s.adjoint_inverse(&s.apply(&s.adjoint(&s.inverse(&v).unwrap()).unwrap()).unwrap()).unwrap();
        prop_assert!(rel(&back, &v) < 1e-12);
        prop_assert!(rel(&s.apply(&s.inverse(&v).unwrap()).unwrap(), &v) < 1e-12);
        prop_assert!(rel(&s.gram_inverse(&s.gram(&v).unwrap()).unwrap(), &v) < 1e-12);
    }

    #[test]
    fn adjoint_identity(alpha in log_uniform(), beta in log_uniform(), sh in shape(), seed in any::<u64>()) {
        let s = OperatorParam::sdp_hadamard(alpha, beta, sh).unwrap();
        let a = sym(sh.total(), seed, 1.0);
        let b = sym(sh.total(), seed ^ 0x9e37, 1.0);
        let lhs = s.apply(&a).unwrap().inner(&b);
        let rhs = a.inner(&s.adjoint(&b).unwrap());
        prop_assert!((lhs - rhs).abs() <= 1e-12 * (1.0 + lhs.abs()));
    }

    #[test]
    fn block_norm_expansion(alpha in log_uniform(), beta in log_uniform(), sh in shape(), seed in any::<u64>()) {
        let s = OperatorParam::sdp_hadamard(alpha, beta, sh).unwrap();
        let x = sym(sh.total(), seed, 1.0);
        let b = x.block_norms(sh).unwrap();
        let expected = (alpha / beta).powi(2) * b.top_left
            + 2.0 * alpha * alpha * b.off_diagonal
            + (alpha * beta).powi(2) * b.bottom_right;
        let got = s.apply(&x).unwrap().norm_sq();
        prop_assert!((got - expected).abs() <= 1e-12 * expected.max(1.0));
    }

    #[test]
    fn psd_prox_reduces_to_projection(alpha in log_uniform(), beta in log_uniform(), sh in shape(), seed in any::<u64>()) {
        let s = OperatorParam::sdp_hadamard(alpha, beta, sh).unwrap();
        let v = sym(sh.total(), seed, 1.0);
        let z = PsdIndicator.prox(&s, &v).unwrap();
        let p = project_psd(&v).unwrap();
        prop_assert!(s.apply(&z).unwrap().minus(&p).norm() <= 1e-12 * (1.0 + p.norm()));
    }

    #[test]
    fn moreau_decomposition(alpha in log_uniform(), beta in log_uniform(), sh in shape(), seed in any::<u64>()) {
        let s = OperatorParam::sdp_hadamard(alpha, beta, sh).unwrap();
        let v = sym(sh.total(), seed, 3.0);
        let r = moreau_residual(&s, &PsdIndicator, &NsdIndicator, &v).unwrap();
        prop_assert!(r < 1e-9 * (1.0 + v.norm()));
    }

    #[test]
    fn matrix_proxes_are_firmly_nonexpansive(alpha in log_uniform(), beta in log_uniform(), seed in any::<u64>()) {
        let sh = BlockShape::new(3, 1).unwrap();
        let s = OperatorParam::sdp_hadamard(alpha, beta, sh).unwrap();
        let (x, y) = (sym(4, seed, 2.0), sym(4, seed.wrapping_add(1), 2.0));
        let diag = LinearDiagOnes { objective: sym(4, seed.wrapping_add(2), 1.0) };
        let evaluators: [&dyn ProxOperator<DenseHermitian<f64>>; 3] = [&PsdIndicator, &NsdIndicator, &diag];
        for p in evaluators {
            let gap = firm_nonexpansiveness_gap(&s, p, &x, &y).unwrap();
            prop_assert!(gap <= 1e-9, "{} gap {gap}", p.name());
        }
        let (xc, yc) = (herm(4, seed), herm(4, seed.wrapping_add(7)));
        let omega = FixedEntrySet::new(vec![0, 2], vec![Complex64::new(1.0, 0.5), Complex64::new(-0.3, 0.0)]).unwrap();
        let sr = LinearToeplitzFixed { objective: herm(4, seed.wrapping_add(3)), observed: omega };
        let gap = firm_nonexpansiveness_gap(&s, &sr, &xc, &yc).unwrap();
        prop_assert!(gap <= 1e-9, "sr gap {gap}");
    }

    #[test]
    fn l1_prox_is_firmly_nonexpansive(d in prop::collection::vec(0.01f64..100.0, 1..8), seed in any::<u64>()) {
        let n = d.len();
        let s = OperatorParam::diagonal_energy(d, 1e8).unwrap();
        let mut rng = seeded_rng(seed);
        let x = DVector::from_fn(n, |_, _| 4.0 * rng.random::<f64>() - 2.0);
        let y = DVector::from_fn(n, |_, _| 4.0 * rng.random::<f64>() - 2.0);
        prop_assert!(firm_nonexpansiveness_gap(&s, &L1Norm, &x, &y).unwrap() <= 1e-9);
    }

    /// The conventional prox of ‖·‖₁ in the metric `M = α² I`, found by a
    /// per-coordinate ternary search, equals `Prox^S(S v)` with `S = α`.
    #[test]
    fn quadratic_metric_relation(alpha in 0.2f64..5.0, v in prop::collection::vec(-3.0f64..3.0, 1..6)) {
        let s = OperatorParam::scalar(alpha).unwrap();
        let v = DVector::from_vec(v);
        let ours = L1Norm.prox(&s, &s.apply(&v).unwrap()).unwrap();
        for i in 0..v.len() {
            let obj = |t: f64| t.abs() + 0.5 * alpha * alpha * (t - v[i]).powi(2);
            let (mut lo, mut hi) = (-4.0, 4.0);
            for _ in 0..200 {
                let (m1, m2) = (lo + (hi - lo) / 3.0, hi - (hi - lo) / 3.0);
                if obj(m1) <= obj(m2) { hi = m2 } else { lo = m1 }
            }
            prop_assert!((0.5 * (lo + hi) - ours[i]).abs() < 1e-6);
        }
    }

    #[test]
    fn psd_projection_is_idempotent(seed in any::<u64>(), n in 1usize..7) {
        let p = project_psd(&sym(n, seed, 1.0)).unwrap();
        prop_assert!(p.min_eigenvalue().unwrap() >= -1e-12);
        prop_assert!(project_psd(&p).unwrap().minus(&p).norm() <= 1e-12 * (1.0 + p.norm()));
    }

    #[test]
    fn toeplitz_projection_is_orthogonal(seed in any::<u64>(), n in 1usize..7) {
        let q = herm(n, seed);
        let t = project_toeplitz(&q);
        prop_assert!(project_toeplitz(&t).minus(&t).norm() < 1e-14);
        // residual orthogonal to any Toeplitz matrix, in particular to t
        prop_assert!(q.minus(&t).inner(&t).abs() < 1e-12);
    }

    /// The DRS fixed-point map is firmly nonexpansive, so the empirical
    /// cocoercivity constant never exceeds one.
    #[test]
    fn drs_map_cocoercivity(alpha in log_uniform(), beta in log_uniform(), seed in any::<u64>()) {
        let sh = BlockShape::new(3, 1).unwrap();
        let s = OperatorParam::sdp_hadamard(alpha, beta, sh).unwrap();
        let pair = ProxPair::new(Box::new(LinearDiagOnes { objective: sym(4, seed, 1.0) }), Box::new(PsdIndicator));
        let samples: Vec<_> = (0..6u64)
            .map(|i| {
                let y = sym(4, seed.wrapping_add(10 + i), 3.0);
                let fy = drs_map(&pair, &s, &y).unwrap();
                (y, fy)
            })
            .collect();
        let est = estimate_cocoercivity(&samples).unwrap();
        prop_assert!(est.raw <= 1.0 + 1e-9, "raw {}", est.raw);
    }

    #[test]
    fn sharp_factor_never_exceeds_basic(l in 0.01f64..1.0, k in 0usize..500) {
        prop_assert!(rate_factor(l, k) <= 1.0 / (k as f64 + 1.0) * (1.0 + 1e-12));
    }

    #[test]
    fn scalar_optimum_beats_perturbations(seed in any::<u64>(), scale in log_uniform()) {
        let x = sym(4, seed, 1.0);
        let l = sym(4, seed.wrapping_add(1), scale);
        let pair = SolutionPair::new(x, l).unwrap();
        let a = optimal_scalar(&pair).unwrap();
        let best = objective(&OperatorParam::scalar(a).unwrap(), &pair).unwrap();
        let mut rng = seeded_rng(seed ^ 0xabc);
        for _ in 0..64 {
            let t = a * (rng.random::<f64>() * 2.0 - 1.0).exp();
            prop_assert!(objective(&OperatorParam::scalar(t).unwrap(), &pair).unwrap() >= best * (1.0 - 1e-12));
        }
    }

    #[test]
    fn diagonal_optimum_beats_perturbations(seed in any::<u64>()) {
        let mut rng = seeded_rng(seed);
        let x = DVector::from_fn(5, |_, _| rng.random::<f64>() + 0.1);
        let l = DVector::from_fn(5, |_, _| rng.random::<f64>() - 0.5);
        let pair = SolutionPair::new(x, l).unwrap();
        let d = optimal_diagonal(&pair, 1e8).unwrap();
        let best = objective(&OperatorParam::diagonal_energy(d.clone(), 1e8).unwrap(), &pair).unwrap();
        for _ in 0..64 {
            let p: Vec<f64> = d.iter().map(|v| v * (rng.random::<f64>() * 2.0 - 1.0).exp()).collect();
            let o = objective(&OperatorParam::diagonal_energy(p, 1e8).unwrap(), &pair).unwrap();
            prop_assert!(o >= best * (1.0 - 1e-12));
        }
    }

    #[test]
    fn separate_choices_beat_perturbations(seed in any::<u64>(), sh in shape()) {
        let n = sh.total();
        let x = project_psd(&sym(n, seed, 1.0)).unwrap();
        let l = project_psd(&sym(n, seed.wrapping_add(5), 2.0)).unwrap().scaled(-1.0);
        prop_assume!(x.norm() > 1e-6 && l.norm() > 1e-6);
        let pair = SolutionPair::new(x, l).unwrap().with_shape(sh);
        prop_assume!(sdp_separate_choices(&pair).is_ok());
        let (a, b) = sdp_separate_choices(&pair).unwrap();
        let obj = |a: f64, b: f64| objective(&OperatorParam::sdp_hadamard(a, b, sh).unwrap(), &pair).unwrap();
        let (fa, fb) = (obj(a, 1.0), obj(1.0, b));
        let mut rng = seeded_rng(seed ^ 0x51);
        for _ in 0..64 {
            let t = (rng.random::<f64>() * 2.0 - 1.0).exp();
            prop_assert!(obj(a * t, 1.0) >= fa * (1.0 - 1e-12));
            prop_assert!(obj(1.0, b * t) >= fb * (1.0 - 1e-12));
        }
    }
}
