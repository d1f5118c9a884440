//! Experiment configuration: a flat TOML file whose keys match the long
//! command-line flags, with flags taking precedence over the file.

use std::path::{Path, PathBuf};

use clap::{Args, ValueEnum};
use serde::{Deserialize, Serialize};

use proxsplit::apps::ReferenceOptions;
use proxsplit::splitting::Algorithm;
use proxsplit::tuning::EstimateMode;

/// Environment variable consulted when no seed is given.
pub const SEED_ENV: &str = "PROXSPLIT_SEED";
pub const DEFAULT_SEED: u64 = 1;

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot read config file {path}: {source}")]
    Read { path: PathBuf, source: std::io::Error },
    #[error("invalid config file {path}: {source}")]
    Parse { path: PathBuf, source: Box<toml::de::Error> },
    #[error("{0}")]
    Invalid(String),
}

fn invalid<T>(msg: impl Into<String>) -> Result<T, ConfigError> {
    Err(ConfigError::Invalid(msg.into()))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum App {
    /// Boolean quadratic program relaxation.
    Bqp,
    /// Off-the-grid spectral super-resolution.
    Sr,
}

impl App {
    pub fn name(self) -> &'static str {
        match self {
            App::Bqp => "bqp",
            App::Sr => "sr",
        }
    }
}

/// The `--param-mode` keyword.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum ModeKind {
    Identity,
    ScalarOpt,
    DiagOpt,
    SdpSeparateAlpha,
    SdpSeparateBeta,
    SdpJointOpt,
    Estimate,
    Manual,
    Sweep,
}

/// A fully resolved parameter mode.
#[derive(Clone, Debug, PartialEq)]
pub enum ParamMode {
    Identity,
    /// `α* = √(‖Λ*‖/‖X*‖)`.
    ScalarOpt,
    /// Diagonal optimum; only defined for vector problems.
    DiagOpt,
    SdpSeparateAlpha,
    SdpSeparateBeta,
    SdpJointOpt,
    Estimate(EstimateMode),
    Manual { alpha: f64, beta: f64 },
    Sweep { alphas: Vec<f64>, betas: Vec<f64> },
}

/// Every setting, all optional, as read from flags or from the config file.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize, Args)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub struct Settings {
    /// Application [default: bqp].
    #[arg(long, value_enum)]
    pub app: Option<App>,
    /// Parameter mode [default: estimate; the sweep subcommand implies sweep].
    #[arg(long, value_enum)]
    pub param_mode: Option<ModeKind>,
    /// Which a-priori estimate the estimate mode uses: alpha, beta or joint
    /// [default: joint].
    #[arg(long, value_parser = parse_estimate)]
    pub estimate: Option<EstimateMode>,
    /// α of the manual mode.
    #[arg(long)]
    pub alpha: Option<f64>,
    /// β of the manual mode [default: 1].
    #[arg(long)]
    pub beta: Option<f64>,
    /// Sweep values of α: `a,b,c` or `log:LO:HI:COUNT` [default: 1].
    #[arg(long)]
    pub alpha_grid: Option<String>,
    /// Sweep values of β, same syntax [default: 1].
    #[arg(long)]
    pub beta_grid: Option<String>,
    /// Solver: drs, admm, pd or pdf [default: drs].
    #[arg(long, value_parser = parse_algorithm)]
    pub algo: Option<Algorithm>,
    /// MSE threshold against the reference [default: 1e-6].
    #[arg(long)]
    pub mse_eps: Option<f64>,
    /// Iteration cap per run [default: 100000].
    #[arg(long)]
    pub max_iters: Option<usize>,
    /// Instance seed [default: $PROXSPLIT_SEED, else 1].
    #[arg(long)]
    pub seed: Option<u64>,
    /// Output directory [default: proxsplit-out].
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Concurrent sweep cells [default: available cores].
    #[arg(long)]
    pub jobs: Option<usize>,
    /// Record wall-clock time in traces (breaks byte-for-byte reproducibility)
    /// [default: false].
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    pub timing: Option<bool>,
    /// Problem size N [default: 40 for bqp, 50 for sr].
    #[arg(long)]
    pub n: Option<usize>,
    /// Problem size K [default: 50 for bqp, 10 for sr].
    #[arg(long)]
    pub k: Option<usize>,
    /// Standard deviation of the entries of A (bqp) [default: 0.05].
    #[arg(long)]
    pub sigma_a: Option<f64>,
    /// Standard deviation of the entries of b (bqp) [default: 1].
    #[arg(long)]
    pub sigma_b: Option<f64>,
    /// Standard deviation of the spike amplitudes (sr) [default: 2].
    #[arg(long)]
    pub sigma: Option<f64>,
    /// Fraction of observed measurements (sr) [default: 0.8].
    #[arg(long)]
    pub obs_frac: Option<f64>,
    /// Load the instance from a file written by `gen` instead of generating it.
    #[arg(long)]
    pub instance: Option<PathBuf>,
    /// Optimality tolerance of the reference solve [default: 1e-10].
    #[arg(long)]
    pub ref_tol: Option<f64>,
    /// Iteration cap of the reference solve [default: 200000].
    #[arg(long)]
    pub ref_max_iters: Option<usize>,
}

fn parse_algorithm(s: &str) -> Result<Algorithm, String> {
    s.parse().map_err(|e: proxsplit::Error| e.to_string())
}

fn parse_estimate(s: &str) -> Result<EstimateMode, String> {
    match s {
        "alpha" => Ok(EstimateMode::Alpha),
        "beta" => Ok(EstimateMode::Beta),
        "joint" => Ok(EstimateMode::Joint),
        other => Err(format!("unknown estimate '{other}' (expected alpha, beta or joint)")),
    }
}

impl Settings {
    pub fn from_toml_file(path: &Path) -> Result<Self, ConfigError> {
        let text =
            std::fs::read_to_string(path).map_err(|source| ConfigError::Read { path: path.to_owned(), source })?;
        toml::from_str(&text).map_err(|source| ConfigError::Parse { path: path.to_owned(), source: Box::new(source) })
    }

    /// Field-wise `self` if set, else `fallback`.
    pub fn or(self, fallback: Settings) -> Settings {
        Settings {
            app: self.app.or(fallback.app),
            param_mode: self.param_mode.or(fallback.param_mode),
            estimate: self.estimate.or(fallback.estimate),
            alpha: self.alpha.or(fallback.alpha),
            beta: self.beta.or(fallback.beta),
            alpha_grid: self.alpha_grid.or(fallback.alpha_grid),
            beta_grid: self.beta_grid.or(fallback.beta_grid),
            algo: self.algo.or(fallback.algo),
            mse_eps: self.mse_eps.or(fallback.mse_eps),
            max_iters: self.max_iters.or(fallback.max_iters),
            seed: self.seed.or(fallback.seed),
            out: self.out.or(fallback.out),
            jobs: self.jobs.or(fallback.jobs),
            timing: self.timing.or(fallback.timing),
            n: self.n.or(fallback.n),
            k: self.k.or(fallback.k),
            sigma_a: self.sigma_a.or(fallback.sigma_a),
            sigma_b: self.sigma_b.or(fallback.sigma_b),
            sigma: self.sigma.or(fallback.sigma),
            obs_frac: self.obs_frac.or(fallback.obs_frac),
            instance: self.instance.or(fallback.instance),
            ref_tol: self.ref_tol.or(fallback.ref_tol),
            ref_max_iters: self.ref_max_iters.or(fallback.ref_max_iters),
        }
    }
}

/// Which subcommand the configuration is resolved for.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CommandKind {
    Run,
    Sweep,
    RateCheck,
    Gen,
}

/// Generator inputs.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct InstanceSpec {
    pub n: usize,
    pub k: usize,
    pub sigma_a: f64,
    pub sigma_b: f64,
    pub sigma: f64,
    pub obs_frac: f64,
    pub seed: u64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentConfig {
    pub app: App,
    pub instance: InstanceSpec,
    pub instance_file: Option<PathBuf>,
    pub mode: ParamMode,
    pub algo: Algorithm,
    pub mse_eps: f64,
    pub max_iters: usize,
    pub out: PathBuf,
    pub jobs: usize,
    pub timing: bool,
    pub reference: ReferenceOptions,
}

/// Parses `a,b,c` or `log:LO:HI:COUNT` into positive values.
pub fn parse_grid(spec: &str) -> Result<Vec<f64>, ConfigError> {
    let values = if let Some(rest) = spec.strip_prefix("log:") {
        let parts: Vec<&str> = rest.split(':').collect();
        let [lo, hi, count] = parts[..] else {
            return invalid(format!("log grid '{spec}' must read log:LO:HI:COUNT"));
        };
        let num = |s: &str| s.trim().parse::<f64>().or_else(|_| invalid(format!("bad number '{s}' in grid '{spec}'")));
        let (lo, hi) = (num(lo)?, num(hi)?);
        let count: usize = count.trim().parse().or_else(|_| invalid(format!("bad count in grid '{spec}'")))?;
        if !(lo > 0.0 && hi >= lo) || count == 0 {
            return invalid(format!("log grid '{spec}' needs 0 < LO ≤ HI and COUNT ≥ 1"));
        }
        if count == 1 {
            vec![lo]
        } else {
            let (a, b) = (lo.ln(), hi.ln());
            (0..count).map(|i| (a + (b - a) * i as f64 / (count - 1) as f64).exp()).collect()
        }
    } else {
        spec.split(',')
            .filter(|s| !s.trim().is_empty())
            .map(|s| s.trim().parse::<f64>().or_else(|_| invalid(format!("bad number '{s}' in grid '{spec}'"))))
            .collect::<Result<Vec<_>, _>>()?
    };
    if values.is_empty() {
        return invalid(format!("grid '{spec}' is empty"));
    }
    if let Some(bad) = values.iter().find(|v| !(**v > 0.0 && v.is_finite())) {
        return invalid(format!("grid values must be positive, got {bad}"));
    }
    Ok(values)
}

fn positive(name: &str, v: f64) -> Result<f64, ConfigError> {
    if v > 0.0 && v.is_finite() {
        Ok(v)
    } else {
        invalid(format!("{name} must be positive and finite, got {v}"))
    }
}

impl ExperimentConfig {
    /// Applies defaults and validates. `env_seed` is the value of
    /// [`SEED_ENV`], used only when no seed is set.
    pub fn resolve(cmd: CommandKind, s: Settings, env_seed: Option<&str>) -> Result<Self, ConfigError> {
        let app = s.app.unwrap_or(App::Bqp);
        let seed = match (s.seed, env_seed) {
            (Some(seed), _) => seed,
            (None, Some(text)) => text
                .trim()
                .parse()
                .or_else(|_| invalid(format!("{SEED_ENV}='{text}' is not an unsigned integer")))?,
            (None, None) => DEFAULT_SEED,
        };
        let (n_default, k_default) = match app {
            App::Bqp => (40, 50),
            App::Sr => (50, 10),
        };
        let instance = InstanceSpec {
            n: s.n.unwrap_or(n_default),
            k: s.k.unwrap_or(k_default),
            sigma_a: positive("sigma-a", s.sigma_a.unwrap_or(0.05))?,
            sigma_b: positive("sigma-b", s.sigma_b.unwrap_or(1.0))?,
            sigma: positive("sigma", s.sigma.unwrap_or(2.0))?,
            obs_frac: s.obs_frac.unwrap_or(0.8),
            seed,
        };
        if instance.n == 0 || instance.k == 0 {
            return invalid("n and k must be positive");
        }
        if !(instance.obs_frac > 0.0 && instance.obs_frac <= 1.0) {
            return invalid(format!("obs-frac must lie in (0, 1], got {}", instance.obs_frac));
        }

        let kind = match (cmd, s.param_mode) {
            (CommandKind::Sweep, None | Some(ModeKind::Sweep)) => ModeKind::Sweep,
            (CommandKind::Sweep, Some(other)) => {
                return invalid(format!("the sweep subcommand uses the sweep mode, not {other:?}"))
            }
            (_, Some(ModeKind::Sweep)) => return invalid("param-mode sweep requires the sweep subcommand"),
            (_, mode) => mode.unwrap_or(ModeKind::Estimate),
        };
        if kind != ModeKind::Manual && (s.alpha.is_some() || s.beta.is_some()) {
            return invalid("alpha/beta apply only to param-mode manual");
        }
        if kind != ModeKind::Sweep && (s.alpha_grid.is_some() || s.beta_grid.is_some()) {
            return invalid("alpha-grid/beta-grid apply only to sweeps");
        }
        if kind != ModeKind::Estimate && s.estimate.is_some() {
            return invalid("estimate applies only to param-mode estimate");
        }
        let mode = match kind {
            ModeKind::Identity => ParamMode::Identity,
            ModeKind::ScalarOpt => ParamMode::ScalarOpt,
            ModeKind::DiagOpt => {
                return invalid(
                    "param-mode diag-opt needs a vector problem; bqp and sr are matrix problems \
                     (use sdp-separate-alpha, sdp-separate-beta or sdp-joint-opt)",
                )
            }
            ModeKind::SdpSeparateAlpha => ParamMode::SdpSeparateAlpha,
            ModeKind::SdpSeparateBeta => ParamMode::SdpSeparateBeta,
            ModeKind::SdpJointOpt => ParamMode::SdpJointOpt,
            ModeKind::Estimate => ParamMode::Estimate(s.estimate.unwrap_or(EstimateMode::Joint)),
            ModeKind::Manual => {
                let Some(alpha) = s.alpha else { return invalid("param-mode manual needs --alpha") };
                ParamMode::Manual { alpha: positive("alpha", alpha)?, beta: positive("beta", s.beta.unwrap_or(1.0))? }
            }
            ModeKind::Sweep => {
                if s.alpha_grid.is_none() && s.beta_grid.is_none() {
                    return invalid("a sweep needs alpha-grid and/or beta-grid");
                }
                let grid = |g: &Option<String>| g.as_deref().map(parse_grid).unwrap_or(Ok(vec![1.0]));
                ParamMode::Sweep { alphas: grid(&s.alpha_grid)?, betas: grid(&s.beta_grid)? }
            }
        };

        let mse_eps = positive("mse-eps", s.mse_eps.unwrap_or(1e-6))?;
        let max_iters = s.max_iters.unwrap_or(100_000);
        let jobs = s
            .jobs
            .unwrap_or_else(|| std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1));
        if max_iters == 0 || jobs == 0 {
            return invalid("max-iters and jobs must be at least 1");
        }
        let reference = ReferenceOptions {
            tol: positive("ref-tol", s.ref_tol.unwrap_or(1e-10))?,
            max_iters: s.ref_max_iters.unwrap_or(200_000),
        };
        Ok(ExperimentConfig {
            app,
            instance,
            instance_file: s.instance,
            mode,
            algo: s.algo.unwrap_or(Algorithm::Drs),
            mse_eps,
            max_iters,
            out: s.out.unwrap_or_else(|| PathBuf::from("proxsplit-out")),
            jobs,
            timing: s.timing.unwrap_or(false),
            reference,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run(s: Settings) -> Result<ExperimentConfig, ConfigError> {
        ExperimentConfig::resolve(CommandKind::Run, s, None)
    }

    #[test]
    fn defaults_follow_the_application() {
        let c = run(Settings::default()).unwrap();
        assert_eq!((c.app, c.instance.n, c.instance.k, c.instance.seed), (App::Bqp, 40, 50, 1));
        assert_eq!(c.mode, ParamMode::Estimate(EstimateMode::Joint));
        let c = run(Settings { app: Some(App::Sr), ..Default::default() }).unwrap();
        assert_eq!((c.instance.n, c.instance.k), (50, 10));
        assert_eq!(c.mse_eps, 1e-6);
    }

    #[test]
    fn seed_precedence() {
        let c = ExperimentConfig::resolve(CommandKind::Run, Settings::default(), Some("7")).unwrap();
        assert_eq!(c.instance.seed, 7);
        let s = Settings { seed: Some(3), ..Default::default() };
        assert_eq!(ExperimentConfig::resolve(CommandKind::Run, s, Some("7")).unwrap().instance.seed, 3);
        assert!(ExperimentConfig::resolve(CommandKind::Run, Settings::default(), Some("x")).is_err());
    }

    #[test]
    fn flags_override_file() {
        let file: Settings = toml::from_str("app = \"sr\"\nmse-eps = 1e-4\nseed = 9\n").unwrap();
        let flags = Settings { seed: Some(2), ..Default::default() };
        let c = run(flags.or(file)).unwrap();
        assert_eq!((c.app, c.mse_eps, c.instance.seed), (App::Sr, 1e-4, 2));
    }

    #[test]
    fn unknown_file_keys_are_rejected() {
        assert!(toml::from_str::<Settings>("apps = \"sr\"").is_err());
    }

    #[test]
    fn mode_validation() {
        let diag = Settings { param_mode: Some(ModeKind::DiagOpt), ..Default::default() };
        assert!(run(diag).is_err());
        let stray = Settings { param_mode: Some(ModeKind::Identity), alpha: Some(2.0), ..Default::default() };
        assert!(run(stray).is_err());
        let manual = Settings { param_mode: Some(ModeKind::Manual), alpha: Some(2.0), ..Default::default() };
        assert_eq!(run(manual).unwrap().mode, ParamMode::Manual { alpha: 2.0, beta: 1.0 });
        let no_alpha = Settings { param_mode: Some(ModeKind::Manual), ..Default::default() };
        assert!(run(no_alpha).is_err());
        assert!(ExperimentConfig::resolve(CommandKind::Sweep, Settings::default(), None).is_err());
        let sweep_in_run = Settings { param_mode: Some(ModeKind::Sweep), ..Default::default() };
        assert!(run(sweep_in_run).is_err());
    }

    #[test]
    fn grids() {
        assert_eq!(parse_grid("0.5, 1,2").unwrap(), vec![0.5, 1.0, 2.0]);
        let g = parse_grid("log:0.01:100:5").unwrap();
        assert_eq!(g.len(), 5);
        assert!((g[2] - 1.0).abs() < 1e-12 && (g[4] - 100.0).abs() < 1e-9);
        assert_eq!(parse_grid("log:3:3:1").unwrap(), vec![3.0]);
        for bad in ["", "1,-2", "log:0:1:3", "log:1:2", "abc"] {
            assert!(parse_grid(bad).is_err(), "{bad}");
        }
        let s = Settings { beta_grid: Some("2,4".into()), ..Default::default() };
        let c = ExperimentConfig::resolve(CommandKind::Sweep, s, None).unwrap();
        assert_eq!(c.mode, ParamMode::Sweep { alphas: vec![1.0], betas: vec![2.0, 4.0] });
    }
}
