//! Experiment configuration files.
//!
//! A configuration is a TOML document. Everything except the target id and
//! the kernel list has a default; [`ExperimentConfig::to_toml`] writes the
//! fully expanded form, which parses back to an equal configuration.
//!
//! ```toml
//! experiment_id = "fig5"
//! mode = "trajectory"
//! metrics = ["tv", "w2"]
//!
//! [target]
//! id = "abs_quad"
//!
//! [run]
//! n_iters = 100000
//! burn_in_fraction = 0.2
//! init = { point = [0.0] }
//!
//! [[kernels]]
//! variant = "USLA"
//! step = 0.1
//! ```

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use masla_core::{
    AxisSpec, GridSpec, Init, Kernel, KernelConfig, Metric, RunSpec, SelectionRule, TargetDistribution, TargetId,
    TargetParams, Variant,
};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, Result};

pub const DEFAULT_SEED: u64 = 24301;
pub const DEFAULT_ITERS: usize = 10_000;
pub const DEFAULT_TRAJECTORY_BURN_IN: f64 = 0.2;
pub const DEFAULT_ENSEMBLE_CHAINS: usize = 2000;

/// How the chains of an experiment are summarised.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    /// Long chains; histograms and distances use the samples kept after burn-in.
    Trajectory,
    /// Many chains; distances are taken per scheduled iterate across chains.
    Ensemble,
}

/// What distances are measured against.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReferenceKind {
    /// The normalized target density integrated over the grid bins.
    AnalyticGrid,
    /// The final iterates of a separate long MASLA ensemble.
    LongRunPool,
}

macro_rules! string_enum {
    ($ty:ident, $kind:literal, $($variant:ident => $id:literal),+) => {
        impl $ty {
            pub const ALL: &'static [$ty] = &[$($ty::$variant),+];

            pub fn id(&self) -> &'static str {
                match self {
                    $($ty::$variant => $id),+
                }
            }
        }

        impl fmt::Display for $ty {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(self.id())
            }
        }

        impl FromStr for $ty {
            type Err = CliError;

            fn from_str(s: &str) -> Result<Self> {
                Self::ALL.iter().copied().find(|m| m.id() == s).ok_or_else(|| {
                    let valid: Vec<_> = Self::ALL.iter().map(|m| m.id()).collect();
                    CliError::Config(format!("unknown {} '{s}'; valid ids: {}", $kind, valid.join(", ")))
                })
            }
        }
    };
}

string_enum!(Mode, "mode", Trajectory => "trajectory", Ensemble => "ensemble");
string_enum!(ReferenceKind, "reference", AnalyticGrid => "analytic_grid", LongRunPool => "long_run_pool");

/// One sampler of an experiment.
#[derive(Debug, Clone, PartialEq)]
pub struct KernelSpec {
    /// Names the kernel in file names and result rows.
    pub label: String,
    pub config: KernelConfig,
    /// Overrides the experiment's initial law for this kernel.
    pub init: Option<Init>,
}

/// The long run whose final iterates stand in for the target.
#[derive(Debug, Clone, PartialEq)]
pub struct PoolSpec {
    pub config: KernelConfig,
    pub n_chains: usize,
    pub n_iters: usize,
    pub seed: u64,
}

impl PoolSpec {
    pub fn default_for(master_seed: u64) -> Self {
        Self {
            config: KernelConfig::new(Variant::Masla, 0.01),
            n_chains: 2000,
            n_iters: 5000,
            seed: master_seed.wrapping_add(1) & i64::MAX as u64,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub experiment_id: String,
    pub mode: Mode,
    pub target: TargetId,
    pub target_params: TargetParams,
    pub kernels: Vec<KernelSpec>,
    /// Nominal sizes; see [`ExperimentConfig::effective_run`].
    pub run: RunSpec,
    /// Iterations recorded in ensemble mode.
    pub schedule: Vec<usize>,
    pub grid: GridSpec,
    pub metrics: Vec<Metric>,
    pub reference: ReferenceKind,
    /// Present exactly when `reference` is the long-run pool.
    pub pool: Option<PoolSpec>,
    /// Multiplies the chain count of the experiment (not of the pool).
    pub scale: f64,
    pub write_trajectories: bool,
    pub output_dir: PathBuf,
}

impl ExperimentConfig {
    pub fn target_distribution(&self) -> Result<TargetDistribution> {
        TargetDistribution::from_id(self.target, &self.target_params)
            .map_err(|e| CliError::Config(format!("target '{}': {e}", self.target)))
    }

    /// The run after applying `scale` to the chain count.
    pub fn effective_run(&self) -> RunSpec {
        let n_chains = ((self.run.n_chains as f64 * self.scale).round() as usize).max(1);
        RunSpec { n_chains, ..self.run.clone() }
    }

    /// Replaces the iteration count, dropping scheduled iterations past it and
    /// recording the new final iteration.
    pub fn set_iters(&mut self, n_iters: usize) {
        self.run.n_iters = n_iters;
        if self.mode == Mode::Ensemble {
            self.schedule.retain(|&k| k < n_iters);
            self.schedule.push(n_iters);
        }
    }

    /// Initial law of one kernel.
    pub fn init_for<'a>(&'a self, kernel: &'a KernelSpec) -> &'a Init {
        kernel.init.as_ref().unwrap_or(&self.run.init)
    }

    /// Checks everything a run relies on.
    pub fn validate(&self) -> Result<()> {
        let config = |msg: String| Err(CliError::Config(msg));
        let target = self.target_distribution()?;
        let dim = target.dim();
        if !valid_label(&self.experiment_id) {
            return config(format!("experiment_id '{}' must be non-empty [A-Za-z0-9_.-]", self.experiment_id));
        }
        if self.kernels.is_empty() {
            return config("at least one [[kernels]] entry is required".into());
        }
        for (i, k) in self.kernels.iter().enumerate() {
            if !valid_label(&k.label) {
                return config(format!("kernel label '{}' must be non-empty [A-Za-z0-9_.-]", k.label));
            }
            if self.kernels[..i].iter().any(|o| o.label == k.label) {
                return config(format!("duplicate kernel label '{}'; give each kernel a distinct `label`", k.label));
            }
            Kernel::new(k.config, target.clone())
                .map_err(|e| CliError::Config(format!("kernel '{}': {e}", k.label)))?;
            check_init(self.init_for(k), dim).map_err(|e| CliError::Config(format!("kernel '{}': {e}", k.label)))?;
        }
        self.run.validate().map_err(|e| CliError::Config(e.to_string()))?;
        if self.run.n_iters == 0 {
            return config("n_iters must be positive".into());
        }
        if self.run.master_seed > i64::MAX as u64 {
            return config(format!("master_seed must not exceed {}", i64::MAX));
        }
        if !(self.scale > 0.0 && self.scale.is_finite()) {
            return config(format!("scale must be positive, got {}", self.scale));
        }
        match self.mode {
            Mode::Trajectory => {
                if !self.schedule.is_empty() {
                    return config("schedule is only used in ensemble mode".into());
                }
            }
            Mode::Ensemble => {
                if self.schedule.is_empty() {
                    return config("ensemble mode needs a non-empty schedule".into());
                }
                if self.schedule.windows(2).any(|w| w[0] >= w[1]) {
                    return config("schedule must be strictly increasing".into());
                }
                if self.schedule.last().is_some_and(|&k| k > self.run.n_iters) {
                    return config(format!("schedule goes beyond n_iters = {}", self.run.n_iters));
                }
                if self.run.burn_in_fraction != 0.0 {
                    return config("burn-in applies to trajectory mode only; ensembles keep every iterate".into());
                }
                if self.write_trajectories {
                    return config("write_trajectories needs trajectory mode".into());
                }
            }
        }
        if self.grid.dim() != dim {
            return config(format!(
                "grid has {} axes but target '{}' has dimension {dim}",
                self.grid.dim(),
                self.target
            ));
        }
        for (i, m) in self.metrics.iter().enumerate() {
            if self.metrics[..i].contains(m) {
                return config(format!("metric '{m}' listed twice"));
            }
        }
        if self.metrics.contains(&Metric::W2) && self.reference == ReferenceKind::AnalyticGrid && dim != 1 {
            return config("w2 against analytic_grid needs a one-dimensional target; use long_run_pool".into());
        }
        match (&self.pool, self.reference) {
            (Some(pool), ReferenceKind::LongRunPool) => {
                if pool.n_chains == 0 || pool.n_iters == 0 {
                    return config("reference_pool needs positive n_chains and n_iters".into());
                }
                if pool.seed > i64::MAX as u64 {
                    return config(format!("reference_pool seed must not exceed {}", i64::MAX));
                }
                Kernel::new(pool.config, target.clone())
                    .map_err(|e| CliError::Config(format!("reference_pool: {e}")))?;
            }
            (None, ReferenceKind::AnalyticGrid) => {}
            (Some(_), ReferenceKind::AnalyticGrid) => {
                return config("reference_pool is only used with reference = \"long_run_pool\"".into());
            }
            (None, ReferenceKind::LongRunPool) => return config("long_run_pool needs a reference_pool".into()),
        }
        Ok(())
    }

    /// The fully expanded configuration as TOML.
    pub fn to_toml(&self) -> String {
        toml::to_string(&RawConfig::from(self)).expect("every field is representable in TOML")
    }
}

fn valid_label(s: &str) -> bool {
    !s.is_empty() && s.chars().all(|c| c.is_ascii_alphanumeric() || matches!(c, '_' | '-' | '.'))
}

fn check_init(init: &Init, dim: usize) -> Result<(), String> {
    let (x, scale) = match init {
        Init::Point(x) => (x, 0.0),
        Init::Gaussian { mean, scale } => (mean, *scale),
    };
    if x.len() != dim {
        return Err(format!("initial point has dimension {} but the target has {dim}", x.len()));
    }
    if !x.iter().all(|v| v.is_finite()) || !(scale >= 0.0 && scale.is_finite()) {
        return Err("initial law must be finite with a non-negative scale".into());
    }
    Ok(())
}

/// Parses and validates a configuration.
pub fn parse_config(text: &str) -> Result<ExperimentConfig> {
    let raw: RawConfig = toml::from_str(text).map_err(|e| CliError::Parse(e.to_string().trim_end().to_string()))?;
    let config = raw.resolve()?;
    config.validate()?;
    Ok(config)
}

pub fn load_config(path: &Path) -> Result<ExperimentConfig> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    parse_config(&text)
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    #[serde(skip_serializing_if = "Option::is_none")]
    experiment_id: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    mode: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    metrics: Option<Vec<String>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    reference: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    schedule: Option<Vec<usize>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    scale: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    write_trajectories: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none")]
    output_dir: Option<PathBuf>,
    target: RawTarget,
    #[serde(skip_serializing_if = "Option::is_none")]
    run: Option<RawRun>,
    #[serde(skip_serializing_if = "Option::is_none")]
    grid: Option<RawGrid>,
    #[serde(skip_serializing_if = "Option::is_none")]
    reference_pool: Option<RawPool>,
    kernels: Vec<RawKernel>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawTarget {
    id: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    sigma: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    lambda: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    y_data: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    dim: Option<usize>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "snake_case")]
enum RawInit {
    Point(Vec<f64>),
    Gaussian { mean: Vec<f64>, scale: f64 },
}

#[derive(Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawRun {
    #[serde(skip_serializing_if = "Option::is_none")]
    n_chains: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    n_iters: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    burn_in_fraction: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    master_seed: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    init: Option<RawInit>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawAxis {
    lo: f64,
    hi: f64,
    bins: usize,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawGrid {
    axes: Vec<RawAxis>,
}

#[derive(Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawPool {
    #[serde(skip_serializing_if = "Option::is_none")]
    variant: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    step: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    n_chains: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    n_iters: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    seed: Option<u64>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawKernel {
    variant: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    label: Option<String>,
    step: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    theta: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    selection: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    rwm_scale: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    init: Option<RawInit>,
}

fn config_err(e: masla_core::Error) -> CliError {
    CliError::Config(e.to_string())
}

impl From<RawInit> for Init {
    fn from(raw: RawInit) -> Self {
        match raw {
            RawInit::Point(x) => Init::Point(x),
            RawInit::Gaussian { mean, scale } => Init::Gaussian { mean, scale },
        }
    }
}

impl From<&Init> for RawInit {
    fn from(init: &Init) -> Self {
        match init {
            Init::Point(x) => RawInit::Point(x.clone()),
            Init::Gaussian { mean, scale } => RawInit::Gaussian { mean: mean.clone(), scale: *scale },
        }
    }
}

impl RawKernel {
    fn resolve(self) -> Result<KernelSpec> {
        let variant: Variant = self.variant.parse().map_err(config_err)?;
        let mut config = KernelConfig::new(variant, self.step);
        if let Some(theta) = self.theta {
            config = config.with_theta(theta);
        }
        if let Some(rule) = self.selection {
            config = config.with_selection(rule.parse::<SelectionRule>().map_err(config_err)?);
        }
        if let Some(scale) = self.rwm_scale {
            config = config.with_rwm_scale(scale);
        }
        Ok(KernelSpec {
            label: self.label.unwrap_or_else(|| variant.id().to_string()),
            config,
            init: self.init.map(Init::from),
        })
    }
}

impl RawConfig {
    fn resolve(self) -> Result<ExperimentConfig> {
        let target: TargetId = self.target.id.parse().map_err(config_err)?;
        let target_params = TargetParams {
            sigma: self.target.sigma,
            lambda: self.target.lambda,
            y_data: self.target.y_data,
            dim: self.target.dim,
        };
        let distribution = TargetDistribution::from_id(target, &target_params)
            .map_err(|e| CliError::Config(format!("target: {e}")))?;
        let mode = match (self.mode, &self.schedule) {
            (Some(m), _) => m.parse()?,
            (None, Some(s)) if !s.is_empty() => Mode::Ensemble,
            (None, _) => Mode::Trajectory,
        };
        let raw_run = self.run.unwrap_or_default();
        let experiment_id = self.experiment_id.unwrap_or_else(|| "experiment".to_string());
        let run = RunSpec {
            n_chains: raw_run.n_chains.unwrap_or(match mode {
                Mode::Trajectory => 1,
                Mode::Ensemble => DEFAULT_ENSEMBLE_CHAINS,
            }),
            n_iters: raw_run.n_iters.unwrap_or(DEFAULT_ITERS),
            burn_in_fraction: raw_run.burn_in_fraction.unwrap_or(match mode {
                Mode::Trajectory => DEFAULT_TRAJECTORY_BURN_IN,
                Mode::Ensemble => 0.0,
            }),
            master_seed: raw_run.master_seed.unwrap_or(DEFAULT_SEED),
            init: raw_run.init.map(Init::from).unwrap_or_else(|| Init::Point(vec![0.0; distribution.dim()])),
        };
        let grid = match self.grid {
            Some(g) => GridSpec::new(
                g.axes
                    .iter()
                    .map(|a| AxisSpec::new(a.lo, a.hi, a.bins))
                    .collect::<Result<_, _>>()
                    .map_err(config_err)?,
            )
            .map_err(config_err)?,
            None => distribution.default_grid(),
        };
        let metrics = match self.metrics {
            Some(ms) => ms.iter().map(|m| m.parse::<Metric>().map_err(config_err)).collect::<Result<_>>()?,
            None => vec![Metric::Tv],
        };
        let reference = match self.reference {
            Some(r) => r.parse()?,
            None => ReferenceKind::AnalyticGrid,
        };
        let pool = match (reference, self.reference_pool) {
            (ReferenceKind::AnalyticGrid, None) => None,
            (ReferenceKind::LongRunPool, raw) => {
                let raw = raw.unwrap_or_default();
                let default = PoolSpec::default_for(run.master_seed);
                let variant = match raw.variant {
                    Some(v) => v.parse().map_err(config_err)?,
                    None => default.config.variant,
                };
                Some(PoolSpec {
                    config: KernelConfig::new(variant, raw.step.unwrap_or(default.config.step)),
                    n_chains: raw.n_chains.unwrap_or(default.n_chains),
                    n_iters: raw.n_iters.unwrap_or(default.n_iters),
                    seed: raw.seed.unwrap_or(default.seed),
                })
            }
            (ReferenceKind::AnalyticGrid, Some(_)) => {
                return Err(CliError::Config("reference_pool is only used with reference = \"long_run_pool\"".into()))
            }
        };
        Ok(ExperimentConfig {
            output_dir: self.output_dir.unwrap_or_else(|| Path::new("out").join(&experiment_id)),
            experiment_id,
            mode,
            target,
            target_params,
            kernels: self.kernels.into_iter().map(RawKernel::resolve).collect::<Result<_>>()?,
            run,
            schedule: self.schedule.unwrap_or_default(),
            grid,
            metrics,
            reference,
            pool,
            scale: self.scale.unwrap_or(1.0),
            write_trajectories: self.write_trajectories.unwrap_or(false),
        })
    }
}

impl From<&ExperimentConfig> for RawConfig {
    fn from(c: &ExperimentConfig) -> Self {
        RawConfig {
            experiment_id: Some(c.experiment_id.clone()),
            mode: Some(c.mode.id().to_string()),
            metrics: Some(c.metrics.iter().map(|m| m.id().to_string()).collect()),
            reference: Some(c.reference.id().to_string()),
            schedule: (c.mode == Mode::Ensemble).then(|| c.schedule.clone()),
            scale: Some(c.scale),
            write_trajectories: Some(c.write_trajectories),
            output_dir: Some(c.output_dir.clone()),
            target: RawTarget {
                id: c.target.id().to_string(),
                sigma: c.target_params.sigma,
                lambda: c.target_params.lambda,
                y_data: c.target_params.y_data.clone(),
                dim: c.target_params.dim,
            },
            run: Some(RawRun {
                n_chains: Some(c.run.n_chains),
                n_iters: Some(c.run.n_iters),
                burn_in_fraction: Some(c.run.burn_in_fraction),
                master_seed: Some(c.run.master_seed),
                init: Some(RawInit::from(&c.run.init)),
            }),
            grid: Some(RawGrid {
                axes: c.grid.axes().iter().map(|a| RawAxis { lo: a.lo, hi: a.hi, bins: a.bins }).collect(),
            }),
            reference_pool: c.pool.as_ref().map(|p| RawPool {
                variant: Some(p.config.variant.id().to_string()),
                step: Some(p.config.step),
                n_chains: Some(p.n_chains),
                n_iters: Some(p.n_iters),
                seed: Some(p.seed),
            }),
            kernels: c
                .kernels
                .iter()
                .map(|k| RawKernel {
                    variant: k.config.variant.id().to_string(),
                    label: Some(k.label.clone()),
                    step: k.config.step,
                    theta: Some(k.config.theta),
                    selection: Some(k.config.selection.id().to_string()),
                    rwm_scale: Some(k.config.rwm_scale),
                    init: k.init.as_ref().map(RawInit::from),
                })
                .collect(),
        }
    }
}
