//! Running a configured experiment and writing its files.
//!
//! Every data file is comma-separated text with floats printed as
//! `{:.16e}` (17 significant digits), so equal runs give equal bytes:
//!
//! * `curve_<label>.csv`: `iteration,kernel,metric,value`
//! * `hist_<label>.csv` (trajectory mode) or `hist_<label>_iter<k>.csv`
//!   (ensemble mode): one bin-center column per dimension, then `mass`
//! * `reference.csv`: the reference bin masses, same columns
//! * `reference_pool.csv`: the long-run pool, one column per dimension
//! * `trajectory_<label>[_chain<i>].csv`: `iteration,x1,...`
//!
//! `config.toml` echoes the expanded configuration and `manifest.json` lists
//! the data files with their SHA-256 checksums plus timings.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use masla_core::metrics::{subsample, W2_POINT_CAP};
use masla_core::{
    acceptance_rate, build_histogram, distance_curve, run_chain_from, run_ensemble, ChainSeed, EmpiricalDistribution,
    GridSpec, HistogramCounts, Metric, Reference, RunSpec, SnapshotSet, TargetDistribution, Trajectory,
    WeightedPointSet,
};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::config::{ExperimentConfig, KernelSpec, Mode, PoolSpec, ReferenceKind};
use crate::error::{CliError, Result};

pub const CURVE_HEADER: &str = "iteration,kernel,metric,value";

/// One distance value.
#[derive(Debug, Clone, PartialEq)]
pub struct ResultRow {
    pub kernel: String,
    pub metric: Metric,
    pub iteration: usize,
    pub value: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Sizes {
    pub n_chains: usize,
    pub n_iters: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Manifest {
    pub experiment_id: String,
    pub version: String,
    pub target: String,
    pub mode: String,
    pub master_seed: u64,
    pub scale: f64,
    pub nominal: Sizes,
    pub effective: Sizes,
    /// The expanded configuration as TOML.
    pub config: String,
    /// Data file name to SHA-256 hex digest.
    pub files: BTreeMap<String, String>,
    /// Wall-clock seconds per kernel label (plus `reference`).
    pub timings_seconds: BTreeMap<String, f64>,
    /// Mean acceptance rate per kernel label, trajectory mode only.
    pub acceptance_rates: BTreeMap<String, f64>,
    /// Every distance in the curve files; not serialized since values may be infinite.
    #[serde(skip)]
    pub results: Vec<ResultRow>,
}

impl Manifest {
    /// The value of one metric for one kernel at its last recorded iteration.
    pub fn final_value(&self, kernel: &str, metric: Metric) -> Option<f64> {
        self.curve(kernel, metric).last().map(|&(_, v)| v)
    }

    /// `(iteration, value)` pairs of one curve.
    pub fn curve(&self, kernel: &str, metric: Metric) -> Vec<(usize, f64)> {
        self.results
            .iter()
            .filter(|r| r.kernel == kernel && r.metric == metric)
            .map(|r| (r.iteration, r.value))
            .collect()
    }
}

/// Float format shared by every data file.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

struct Writer {
    dir: PathBuf,
    files: BTreeMap<String, String>,
}

impl Writer {
    fn new(dir: &Path) -> Result<Self> {
        fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
        Ok(Self { dir: dir.to_path_buf(), files: BTreeMap::new() })
    }

    fn write(&self, name: &str, text: &str) -> Result<()> {
        let path = self.dir.join(name);
        fs::write(&path, text).map_err(|e| CliError::io(path, e))
    }

    fn data(&mut self, name: String, text: String) -> Result<()> {
        self.write(&name, &text)?;
        self.files.insert(name, hex::encode(Sha256::digest(text.as_bytes())));
        Ok(())
    }
}

fn axis_header(dim: usize) -> String {
    (1..=dim).map(|i| format!("x{i}")).collect::<Vec<_>>().join(",")
}

/// Bin centers and masses; a histogram with nothing in range has zero mass everywhere.
fn histogram_csv(grid: &GridSpec, masses: &[f64]) -> String {
    let mut out = format!("{},mass\n", axis_header(grid.dim()));
    for (flat, m) in masses.iter().enumerate() {
        for c in grid.center(flat) {
            out.push_str(&fmt_f64(c));
            out.push(',');
        }
        out.push_str(&fmt_f64(*m));
        out.push('\n');
    }
    out
}

fn counts_csv(points: &[Vec<f64>], grid: &GridSpec) -> String {
    let counts = HistogramCounts::accumulate(points.iter().map(Vec::as_slice), grid);
    let total = counts.in_range();
    let masses: Vec<f64> =
        counts.counts.iter().map(|&c| if total == 0 { 0.0 } else { c as f64 / total as f64 }).collect();
    histogram_csv(grid, &masses)
}

fn points_csv(points: &[Vec<f64>], dim: usize, with_index: bool) -> String {
    let mut out = String::new();
    if with_index {
        out.push_str("iteration,");
    }
    out.push_str(&axis_header(dim));
    out.push('\n');
    for (i, p) in points.iter().enumerate() {
        if with_index {
            let _ = write!(out, "{i},");
        }
        out.push_str(&p.iter().map(|&v| fmt_f64(v)).collect::<Vec<_>>().join(","));
        out.push('\n');
    }
    out
}

fn curve_csv(rows: &[ResultRow]) -> String {
    let mut out = format!("{CURVE_HEADER}\n");
    for r in rows {
        let _ = writeln!(out, "{},{},{},{}", r.iteration, r.kernel, r.metric, fmt_f64(r.value));
    }
    out
}

/// The references a run measures against.
struct References {
    grid: Option<EmpiricalDistribution>,
    points: Option<WeightedPointSet>,
}

impl References {
    fn for_metric(&self, metric: Metric) -> Reference {
        match (metric, &self.points) {
            (Metric::W2, Some(p)) => Reference::Points(p.clone()),
            _ => Reference::Grid(self.grid.clone().expect("grid reference is built for this metric")),
        }
    }
}

fn pool_samples(config: &ExperimentConfig, pool: &PoolSpec, target: &TargetDistribution) -> Result<Vec<Vec<f64>>> {
    let run = RunSpec {
        n_chains: pool.n_chains,
        n_iters: pool.n_iters,
        burn_in_fraction: 0.0,
        master_seed: pool.seed,
        init: config.run.init.clone(),
    };
    let set = run_ensemble(pool.config, target, &run, &[pool.n_iters])?;
    Ok(set.snapshots.into_iter().next().expect("one snapshot"))
}

fn build_references(config: &ExperimentConfig, target: &TargetDistribution, out: &mut Writer) -> Result<References> {
    let needs_grid = config.metrics.contains(&Metric::Tv)
        || (config.metrics.contains(&Metric::W2) && config.reference == ReferenceKind::AnalyticGrid);
    match (config.reference, &config.pool) {
        (ReferenceKind::LongRunPool, Some(pool)) => {
            let samples = pool_samples(config, pool, target)?;
            out.data("reference_pool.csv".into(), points_csv(&samples, target.dim(), false))?;
            let grid = if needs_grid { Some(build_histogram(&samples, &config.grid)?) } else { None };
            if let Some(g) = &grid {
                out.data("reference.csv".into(), histogram_csv(g.grid(), g.masses()))?;
            }
            let points = WeightedPointSet::uniform(subsample(&samples, W2_POINT_CAP, pool.seed))?;
            Ok(References { grid, points: Some(points) })
        }
        _ => {
            let grid = if needs_grid { Some(target.reference_density(&config.grid)?) } else { None };
            if let Some(g) = &grid {
                out.data("reference.csv".into(), histogram_csv(g.grid(), g.masses()))?;
            }
            Ok(References { grid, points: None })
        }
    }
}

fn distances(
    config: &ExperimentConfig,
    refs: &References,
    label: &str,
    snapshots: &SnapshotSet,
) -> Result<Vec<ResultRow>> {
    let mut rows = Vec::new();
    for &metric in &config.metrics {
        let curve = distance_curve(snapshots, &refs.for_metric(metric), metric, config.run.master_seed)?;
        rows.extend(curve.into_iter().map(|(iteration, value)| ResultRow {
            kernel: label.to_string(),
            metric,
            iteration,
            value,
        }));
    }
    Ok(rows)
}

struct KernelOutcome {
    rows: Vec<ResultRow>,
    acceptance: Option<f64>,
}

fn run_trajectories(
    config: &ExperimentConfig,
    run: &RunSpec,
    target: &TargetDistribution,
    refs: &References,
    kernel: &KernelSpec,
    out: &mut Writer,
) -> Result<KernelOutcome> {
    let init = config.init_for(kernel);
    let chains: Vec<Trajectory> = (0..run.n_chains as u64)
        .into_par_iter()
        .map(|i| run_chain_from(kernel.config, target, init, run.n_iters, ChainSeed::new(run.master_seed, i)))
        .collect::<Result<_, _>>()?;
    let mut retained = Vec::new();
    let mut rate = 0.0;
    for t in &chains {
        retained.extend_from_slice(t.after_burn_in(run.burn_in_fraction)?);
        rate += acceptance_rate(t)?;
    }
    if config.write_trajectories {
        for (i, t) in chains.iter().enumerate() {
            let name = if chains.len() == 1 {
                format!("trajectory_{}.csv", kernel.label)
            } else {
                format!("trajectory_{}_chain{i}.csv", kernel.label)
            };
            out.data(name, points_csv(&t.positions, target.dim(), true))?;
        }
    }
    out.data(format!("hist_{}.csv", kernel.label), counts_csv(&retained, &config.grid))?;
    let pooled = SnapshotSet { schedule: vec![run.n_iters], snapshots: vec![retained], init: init.clone() };
    Ok(KernelOutcome {
        rows: distances(config, refs, &kernel.label, &pooled)?,
        acceptance: Some(rate / chains.len() as f64),
    })
}

fn run_snapshots(
    config: &ExperimentConfig,
    run: &RunSpec,
    target: &TargetDistribution,
    refs: &References,
    kernel: &KernelSpec,
    out: &mut Writer,
) -> Result<KernelOutcome> {
    let run = RunSpec { init: config.init_for(kernel).clone(), ..run.clone() };
    let set = run_ensemble(kernel.config, target, &run, &config.schedule)?;
    for (k, snap) in set.schedule.iter().zip(&set.snapshots) {
        out.data(format!("hist_{}_iter{k}.csv", kernel.label), counts_csv(snap, &config.grid))?;
    }
    Ok(KernelOutcome { rows: distances(config, refs, &kernel.label, &set)?, acceptance: None })
}

/// Runs every kernel of `config` and writes the output directory.
pub fn run_experiment(config: &ExperimentConfig) -> Result<Manifest> {
    config.validate()?;
    let target = config.target_distribution()?;
    let run = config.effective_run();
    let mut out = Writer::new(&config.output_dir)?;
    let echo = config.to_toml();
    out.write("config.toml", &echo)?;

    let mut timings = BTreeMap::new();
    let clock = Instant::now();
    let refs = build_references(config, &target, &mut out)?;
    timings.insert("reference".to_string(), clock.elapsed().as_secs_f64());

    let mut results = Vec::new();
    let mut acceptance_rates = BTreeMap::new();
    for kernel in &config.kernels {
        let clock = Instant::now();
        let outcome = match config.mode {
            Mode::Trajectory => run_trajectories(config, &run, &target, &refs, kernel, &mut out)?,
            Mode::Ensemble => run_snapshots(config, &run, &target, &refs, kernel, &mut out)?,
        };
        timings.insert(kernel.label.clone(), clock.elapsed().as_secs_f64());
        if let Some(a) = outcome.acceptance {
            acceptance_rates.insert(kernel.label.clone(), a);
        }
        if !config.metrics.is_empty() {
            out.data(format!("curve_{}.csv", kernel.label), curve_csv(&outcome.rows))?;
        }
        results.extend(outcome.rows);
    }

    let manifest = Manifest {
        experiment_id: config.experiment_id.clone(),
        version: env!("CARGO_PKG_VERSION").to_string(),
        target: config.target.id().to_string(),
        mode: config.mode.id().to_string(),
        master_seed: config.run.master_seed,
        scale: config.scale,
        nominal: Sizes { n_chains: config.run.n_chains, n_iters: config.run.n_iters },
        effective: Sizes { n_chains: run.n_chains, n_iters: run.n_iters },
        config: echo,
        files: out.files.clone(),
        timings_seconds: timings,
        acceptance_rates,
        results,
    };
    let json = serde_json::to_string_pretty(&manifest).expect("manifest fields are finite");
    out.write("manifest.json", &(json + "\n"))?;
    Ok(manifest)
}

/// Reads a manifest written by [`run_experiment`].
pub fn read_manifest(dir: &Path) -> Result<Manifest> {
    let path = dir.join("manifest.json");
    let text = fs::read_to_string(&path).map_err(|e| CliError::io(&path, e))?;
    serde_json::from_str(&text).map_err(|e| CliError::Parse(format!("{}: {e}", path.display())))
}

/// Recomputes the checksums of the data files listed in `manifest`.
pub fn verify_checksums(dir: &Path, manifest: &Manifest) -> Result<Vec<String>> {
    let mut mismatched = Vec::new();
    for (name, digest) in &manifest.files {
        let path = dir.join(name);
        let bytes = fs::read(&path).map_err(|e| CliError::io(&path, e))?;
        if hex::encode(Sha256::digest(&bytes)) != *digest {
            mismatched.push(name.clone());
        }
    }
    Ok(mismatched)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::figures::FigureId;

    fn small(fig: FigureId, dir: &Path) -> ExperimentConfig {
        let mut c = fig.config();
        c.output_dir = dir.to_path_buf();
        c
    }

    #[test]
    fn trajectory_files_hold_every_iterate() {
        let dir = tempfile::tempdir().unwrap();
        let m = run_experiment(&small(FigureId::Fig1, dir.path())).unwrap();
        for label in ["MALA", "ULA"] {
            let text = fs::read_to_string(dir.path().join(format!("trajectory_{label}.csv"))).unwrap();
            let mut lines = text.lines();
            assert_eq!(lines.next(), Some("iteration,x1"));
            assert_eq!(lines.count(), 10_001);
        }
        let first = fs::read_to_string(dir.path().join("trajectory_ULA.csv")).unwrap();
        assert_eq!(first.lines().nth(1), Some("0,5.0000000000000000e0"));
        assert!(m.results.is_empty());
        assert!(!m.files.keys().any(|f| f.starts_with("curve_")));
    }

    #[test]
    fn manifest_round_trips_and_matches_outputs() {
        let dir = tempfile::tempdir().unwrap();
        let mut c = small(FigureId::Fig5, dir.path());
        c.set_iters(2000);
        let m = run_experiment(&c).unwrap();
        let back = read_manifest(dir.path()).unwrap();
        assert_eq!(back.files, m.files);
        assert_eq!(back.effective, Sizes { n_chains: 1, n_iters: 2000 });
        assert_eq!(back.master_seed, c.run.master_seed);
        assert!(back.timings_seconds.contains_key("reference"));
        assert_eq!(crate::config::parse_config(&back.config).unwrap(), c);
        assert!(verify_checksums(dir.path(), &back).unwrap().is_empty());

        let curve = fs::read_to_string(dir.path().join("curve_MASLA.csv")).unwrap();
        let mut lines = curve.lines();
        assert_eq!(lines.next(), Some(CURVE_HEADER));
        assert!(lines.next().unwrap().starts_with("2000,MASLA,tv,"));
        let hist = fs::read_to_string(dir.path().join("hist_USLA.csv")).unwrap();
        assert_eq!(hist.lines().next(), Some("x1,mass"));
        assert_eq!(hist.lines().count(), 401);

        fs::write(dir.path().join("hist_USLA.csv"), "x1,mass\n").unwrap();
        assert_eq!(verify_checksums(dir.path(), &back).unwrap(), vec!["hist_USLA.csv".to_string()]);
    }

    #[test]
    fn ensemble_histograms_follow_the_schedule() {
        let dir = tempfile::tempdir().unwrap();
        let mut c = small(FigureId::Fig4, dir.path());
        c.kernels.truncate(2);
        c.scale = 0.01;
        c.set_iters(20);
        let m = run_experiment(&c).unwrap();
        assert_eq!(c.schedule, vec![1, 10, 20]);
        for k in [1, 10, 20] {
            assert!(m.files.contains_key(&format!("hist_MASLA_tau1e-3_iter{k}.csv")));
        }
        assert_eq!(m.curve("ProxSub_tau1e-3", Metric::Tv).len(), 3);
        assert!(m.files.contains_key("reference.csv"));
    }

    #[test]
    fn unwritable_output_is_an_io_error() {
        let dir = tempfile::tempdir().unwrap();
        let blocker = dir.path().join("file");
        fs::write(&blocker, "").unwrap();
        let e = run_experiment(&small(FigureId::Fig1, &blocker.join("out"))).unwrap_err();
        assert_eq!(e.exit_code(), 4, "{e}");
    }
}
