//! Douglas–Rachford type splitting with operator-parametrized proximal
//! operators.
//!
//! - [`numerics`]: dense Hermitian matrices, cone projections, Toeplitz maps.
//! - [`params`]: the operator parameter `S` and its algebra.
//! - [`prox`]: extended proximal evaluators `Prox_f^S`.
//! - [`splitting`]: DRS, ADMM, PD and PDF, traces and rate checks.
//! - [`tuning`]: parameter objectives, closed forms and a-priori estimates.
//! - [`apps`]: the BQP and super-resolution SDPs and their reference solves.
//!
//! ```
//! use proxsplit::apps::gen_bqp;
//! use proxsplit::numerics::DenseHermitian;
//! use proxsplit::splitting::{run_drs, SolveOptions, StopRule};
//! use proxsplit::tuning::{bqp_estimate, EstimateMode};
//!
//! let inst = gen_bqp(6, 8, 0.3, 1.0, 1)?;
//! let s = bqp_estimate(&inst.a, &inst.b)?.choice(EstimateMode::Joint).to_param(inst.shape())?;
//! let opts = SolveOptions::new(StopRule::optimality(1e-8, 10_000));
//! let run = run_drs(&inst.prox_pair(), &s, &DenseHermitian::zeros(inst.dim()), &opts)?;
//! assert!(run.state.x.minus(&run.state.z).norm() <= 1e-8);
//! # Ok::<(), proxsplit::Error>(())
//! ```

pub mod apps;
pub mod error;
pub mod numerics;
pub mod params;
pub mod prox;
pub mod splitting;
pub mod tuning;

pub use error::{Error, Result};
