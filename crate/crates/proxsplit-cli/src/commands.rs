//! The `run`, `sweep`, `ratecheck` and `gen` subcommands.
//!
//! Exit codes: 0 when the MSE threshold is reached (or, for `ratecheck`, no
//! bound is violated), 2 when a run stops at the iteration cap (or a bound
//! is violated), 1 for invalid configurations and failures.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use serde::{Deserialize, Serialize};

use proxsplit::apps::{Instance, ReferenceSolution};
use proxsplit::numerics::Field;
use proxsplit::splitting::{Algorithm, StopStatus};
use proxsplit::tuning::GainReport;

use crate::config::{App, CommandKind, ConfigError, ExperimentConfig, ParamMode, Settings, SEED_ENV};
use crate::experiment::{generate, AnyProblem, Problem, ReferenceRecord, ResolvedParam, SweepRow};

pub const SUMMARY_FORMAT: &str = "proxsplit-summary v1";
pub const SWEEP_HEADER: &str = "# proxsplit-sweep v1";

pub const EXIT_OK: u8 = 0;
pub const EXIT_INVALID: u8 = 1;
pub const EXIT_MAX_ITERS: u8 = 2;

#[derive(Debug, Parser)]
#[command(name = "proxsplit", version, about = "Operator-parametrized splitting experiments")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, clap::Args)]
pub struct CommonArgs {
    /// TOML file with the same keys as the long flags; flags win.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[command(flatten)]
    pub settings: Settings,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Solve once; writes trace.csv, summary.json, reference.json, instance.json.
    Run(CommonArgs),
    /// Iterations-to-threshold over an (α, β) grid; writes sweep.csv.
    Sweep(CommonArgs),
    /// Solve and check the worst-case rate bounds; writes ratecheck.json.
    Ratecheck(CommonArgs),
    /// Generate an instance only; writes instance.json.
    Gen(CommonArgs),
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Solver(#[from] proxsplit::Error),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("serialization: {0}")]
    Json(#[from] serde_json::Error),
}

/// Reference metadata copied into a summary.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReferenceMeta {
    pub iterations: usize,
    pub residual: f64,
    pub converged: bool,
    pub cross_check_relative_difference: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub format: String,
    pub app: App,
    pub seed: u64,
    pub algo: Algorithm,
    pub param: ResolvedParam,
    pub mse_eps: f64,
    pub max_iters: usize,
    pub iterations: usize,
    pub reached_threshold: bool,
    pub final_mse: Option<f64>,
    /// Acceleration gain `ξ` of the parameter, from the reference pair.
    pub gain: GainReport,
    pub reference: ReferenceMeta,
}

fn write(path: &Path, contents: &str) -> Result<(), CliError> {
    fs::write(path, contents).map_err(|source| CliError::Io { path: path.to_owned(), source })
}

/// Parses, resolves and runs one command line.
pub fn execute(cli: Cli) -> Result<u8, CliError> {
    let (kind, args) = match cli.command {
        Command::Run(a) => (CommandKind::Run, a),
        Command::Sweep(a) => (CommandKind::Sweep, a),
        Command::Ratecheck(a) => (CommandKind::RateCheck, a),
        Command::Gen(a) => (CommandKind::Gen, a),
    };
    let file = match &args.config {
        Some(path) => Settings::from_toml_file(path)?,
        None => Settings::default(),
    };
    let env_seed = std::env::var(SEED_ENV).ok();
    let cfg = ExperimentConfig::resolve(kind, args.settings.or(file), env_seed.as_deref())?;
    run_config(kind, &cfg)
}

pub fn run_config(kind: CommandKind, cfg: &ExperimentConfig) -> Result<u8, CliError> {
    fs::create_dir_all(&cfg.out).map_err(|source| CliError::Io { path: cfg.out.clone(), source })?;
    let instance = load_instance(cfg)?;
    write(&cfg.out.join("instance.json"), &instance.to_json()?)?;
    if kind == CommandKind::Gen {
        return Ok(EXIT_OK);
    }
    match AnyProblem::new(&instance)? {
        AnyProblem::Bqp(p) => dispatch(kind, cfg, &instance, &p),
        AnyProblem::Sr(p) => dispatch(kind, cfg, &instance, &p),
    }
}

fn load_instance(cfg: &ExperimentConfig) -> Result<Instance, CliError> {
    let Some(path) = &cfg.instance_file else {
        return Ok(generate(cfg.app, &cfg.instance)?);
    };
    let text = fs::read_to_string(path).map_err(|source| CliError::Io { path: path.clone(), source })?;
    let instance = Instance::from_json(&text)?;
    let app = match instance {
        Instance::Bqp(_) => App::Bqp,
        Instance::Sr(_) => App::Sr,
    };
    if app != cfg.app {
        return Err(ConfigError::Invalid(format!(
            "instance file holds a {} instance but app is {}",
            app.name(),
            cfg.app.name()
        ))
        .into());
    }
    Ok(instance)
}

fn dispatch<T: Field>(
    kind: CommandKind,
    cfg: &ExperimentConfig,
    instance: &Instance,
    p: &Problem<T>,
) -> Result<u8, CliError> {
    let reference = p.reference(cfg.reference)?;
    write(&cfg.out.join("reference.json"), &serde_json::to_string(&reference)?)?;
    let x_ref = &reference.solution.x;
    match kind {
        CommandKind::Run => {
            let param = p.resolve(&cfg.mode, &reference.solution)?;
            let run = p.run_to_threshold(&param.param, cfg.algo, x_ref, cfg.mse_eps, cfg.max_iters, cfg.timing)?;
            write(&cfg.out.join("trace.csv"), &run.trace.to_csv())?;
            let summary = summarize(cfg, instance, p, &reference, param, &run.trace)?;
            write(&cfg.out.join("summary.json"), &serde_json::to_string_pretty(&summary)?)?;
            Ok(if summary.reached_threshold { EXIT_OK } else { EXIT_MAX_ITERS })
        }
        CommandKind::Sweep => {
            let ParamMode::Sweep { alphas, betas } = &cfg.mode else {
                unreachable!("sweep configs resolve to the sweep mode")
            };
            let cells: Vec<(f64, f64)> = alphas.iter().flat_map(|&a| betas.iter().map(move |&b| (a, b))).collect();
            let rows = p.sweep(&cells, cfg.algo, x_ref, cfg.mse_eps, cfg.max_iters, cfg.jobs);
            write(&cfg.out.join("sweep.csv"), &sweep_csv(&rows))?;
            Ok(if rows.iter().all(|r| r.reached) { EXIT_OK } else { EXIT_MAX_ITERS })
        }
        CommandKind::RateCheck => {
            let param = p.resolve(&cfg.mode, &reference.solution)?;
            let (run, report) = p.rate_check(&param.param, cfg.algo, x_ref, cfg.mse_eps, cfg.max_iters, cfg.timing)?;
            write(&cfg.out.join("trace.csv"), &run.trace.to_csv())?;
            write(&cfg.out.join("ratecheck.json"), &serde_json::to_string_pretty(&report)?)?;
            Ok(if report.holds() { EXIT_OK } else { EXIT_MAX_ITERS })
        }
        CommandKind::Gen => Ok(EXIT_OK),
    }
}

fn summarize<T: Field>(
    cfg: &ExperimentConfig,
    instance: &Instance,
    p: &Problem<T>,
    reference: &ReferenceRecord<T>,
    param: ResolvedParam,
    trace: &proxsplit::splitting::ConvergenceTrace,
) -> Result<RunSummary, CliError> {
    let sol: &ReferenceSolution<T> = &reference.solution;
    Ok(RunSummary {
        format: SUMMARY_FORMAT.into(),
        app: cfg.app,
        seed: instance.seed(),
        algo: cfg.algo,
        gain: p.gain(&param.param, sol)?,
        param,
        mse_eps: cfg.mse_eps,
        max_iters: cfg.max_iters,
        iterations: trace.iterations(),
        reached_threshold: trace.status == StopStatus::Converged,
        final_mse: trace.last().and_then(|r| r.mse),
        reference: ReferenceMeta {
            iterations: sol.iterations,
            residual: sol.residual,
            converged: sol.converged,
            cross_check_relative_difference: reference.cross_check.relative_difference,
        },
    })
}

pub fn sweep_csv(rows: &[SweepRow]) -> String {
    let mut out = String::new();
    out.push_str(SWEEP_HEADER);
    out.push_str("\nalpha,beta,iterations,reached,final_mse,basic_bound_holds,monotone,error\n");
    for r in rows {
        let mse = r.final_mse.map(|m| format!("{m:e}")).unwrap_or_default();
        let err = r.error.as_deref().unwrap_or("").replace([',', '\n'], ";");
        let _ = writeln!(
            out,
            "{:e},{:e},{},{},{},{},{},{}",
            r.alpha, r.beta, r.iterations, r.reached, mse, r.basic_bound_holds, r.monotone, err
        );
    }
    out
}
