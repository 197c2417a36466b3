//! Single trajectories and ensembles of independent chains.
//!
//! Chain `i` of an ensemble draws from the stream `ChainSeed::new(master, i)`:
//! first the initial point (for a Gaussian start), then its transitions. The
//! result does not depend on how chains are scheduled across threads.

use rayon::prelude::*;

use crate::error::{check_dim, check_finite, Error, Result};
use crate::kernel::{Kernel, KernelConfig};
use crate::potential::TargetDistribution;
use crate::rng::{ChainSeed, Draws};

/// Initial law of every chain.
#[derive(Debug, Clone, PartialEq)]
pub enum Init {
    Point(Vec<f64>),
    /// `mean + scale * z` with `z` standard normal.
    Gaussian {
        mean: Vec<f64>,
        scale: f64,
    },
}

impl Init {
    pub fn dim(&self) -> usize {
        match self {
            Init::Point(x) => x.len(),
            Init::Gaussian { mean, .. } => mean.len(),
        }
    }

    fn validate(&self, dim: usize) -> Result<()> {
        match self {
            Init::Point(x) => {
                check_dim(dim, x)?;
                check_finite(x)
            }
            Init::Gaussian { mean, scale } => {
                check_dim(dim, mean)?;
                check_finite(mean)?;
                if !(*scale >= 0.0 && scale.is_finite()) {
                    return Err(Error::Argument(format!("initial scale must be non-negative, got {scale}")));
                }
                Ok(())
            }
        }
    }

    pub fn sample<D: Draws>(&self, draws: &mut D) -> Vec<f64> {
        match self {
            Init::Point(x) => x.clone(),
            Init::Gaussian { mean, scale } => mean.iter().map(|m| m + scale * draws.standard_normal()).collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunSpec {
    pub n_chains: usize,
    pub n_iters: usize,
    /// Fraction of a single trajectory discarded before building a histogram.
    pub burn_in_fraction: f64,
    pub master_seed: u64,
    pub init: Init,
}

impl RunSpec {
    pub fn validate(&self) -> Result<()> {
        if self.n_chains == 0 {
            return Err(Error::Argument("n_chains must be positive".into()));
        }
        if !(0.0..1.0).contains(&self.burn_in_fraction) {
            return Err(Error::Argument(format!("burn_in_fraction must lie in [0, 1), got {}", self.burn_in_fraction)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    /// `n_iters + 1` positions, starting with the initial point.
    pub positions: Vec<Vec<f64>>,
    pub accepts: u64,
    pub kernel_id: String,
    pub target_id: String,
    pub seed: ChainSeed,
    pub adjusted: bool,
}

impl Trajectory {
    pub fn n_iters(&self) -> usize {
        self.positions.len().saturating_sub(1)
    }

    /// Positions after discarding `floor(fraction * n_iters)` transitions; the
    /// initial point is never retained.
    pub fn after_burn_in(&self, fraction: f64) -> Result<&[Vec<f64>]> {
        if !(0.0..1.0).contains(&fraction) {
            return Err(Error::Argument(format!("burn-in fraction must lie in [0, 1), got {fraction}")));
        }
        let burn = burn_in_count(self.n_iters(), fraction);
        Ok(&self.positions[(burn + 1).min(self.positions.len())..])
    }
}

/// `floor(fraction * n_iters)`.
pub fn burn_in_count(n_iters: usize, fraction: f64) -> usize {
    ((fraction * n_iters as f64).floor() as usize).min(n_iters)
}

/// Per-iterate positions of an ensemble.
#[derive(Debug, Clone, PartialEq)]
pub struct SnapshotSet {
    pub schedule: Vec<usize>,
    /// `snapshots[s][i]` is chain `i` after `schedule[s]` transitions.
    pub snapshots: Vec<Vec<Vec<f64>>>,
    pub init: Init,
}

impl SnapshotSet {
    pub fn n_chains(&self) -> usize {
        self.snapshots.first().map_or(0, Vec::len)
    }

    pub fn at(&self, iteration: usize) -> Option<&[Vec<f64>]> {
        self.schedule.iter().position(|&k| k == iteration).map(|s| self.snapshots[s].as_slice())
    }
}

/// `n_iters` transitions from `x0` using the stream of `seed`.
pub fn run_chain(
    config: KernelConfig,
    target: &TargetDistribution,
    x0: &[f64],
    n_iters: usize,
    seed: impl Into<ChainSeed>,
) -> Result<Trajectory> {
    run_chain_from(config, target, &Init::Point(x0.to_vec()), n_iters, seed)
}

/// Like [`run_chain`], but the start is drawn from `init` on the chain's own
/// stream, exactly as chain `seed.index` of an ensemble does.
pub fn run_chain_from(
    config: KernelConfig,
    target: &TargetDistribution,
    init: &Init,
    n_iters: usize,
    seed: impl Into<ChainSeed>,
) -> Result<Trajectory> {
    let seed = seed.into();
    init.validate(target.dim())?;
    let kernel = Kernel::new(config, target.clone())?;
    let mut rng = seed.rng();
    let x0 = init.sample(&mut rng);
    let mut state = kernel.init_state(&x0, &mut rng)?;
    let mut positions = Vec::with_capacity(n_iters + 1);
    positions.push(state.position.clone());
    for _ in 0..n_iters {
        kernel.step(&mut state, &mut rng)?;
        positions.push(state.position.clone());
    }
    Ok(Trajectory {
        positions,
        accepts: state.accepts,
        kernel_id: config.variant.id().to_string(),
        target_id: target.id().to_string(),
        seed,
        adjusted: config.variant.is_adjusted(),
    })
}

fn check_schedule(schedule: &[usize], n_iters: usize) -> Result<()> {
    if schedule.is_empty() {
        return Err(Error::Argument("snapshot schedule is empty".into()));
    }
    if schedule.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::Argument("snapshot schedule must be strictly increasing".into()));
    }
    let last = *schedule.last().expect("non-empty");
    if last > n_iters {
        return Err(Error::Argument(format!("snapshot {last} is beyond n_iters = {n_iters}")));
    }
    Ok(())
}

/// The scheduled iterates of one chain of an ensemble.
fn chain_snapshots(kernel: &Kernel, run: &RunSpec, schedule: &[usize], index: usize) -> Result<Vec<Vec<f64>>> {
    let mut rng = ChainSeed::new(run.master_seed, index as u64).rng();
    let x0 = run.init.sample(&mut rng);
    let mut state = kernel.init_state(&x0, &mut rng)?;
    let mut out = Vec::with_capacity(schedule.len());
    let mut done = 0;
    for &k in schedule {
        while done < k {
            kernel.step(&mut state, &mut rng)?;
            done += 1;
        }
        out.push(state.position.clone());
    }
    Ok(out)
}

/// Runs `run.n_chains` independent chains on the global thread pool and
/// records every chain at each scheduled iteration.
pub fn run_ensemble(
    config: KernelConfig,
    target: &TargetDistribution,
    run: &RunSpec,
    schedule: &[usize],
) -> Result<SnapshotSet> {
    run.validate()?;
    run.init.validate(target.dim())?;
    check_schedule(schedule, run.n_iters)?;
    let kernel = Kernel::new(config, target.clone())?;
    let per_chain: Vec<Vec<Vec<f64>>> =
        (0..run.n_chains).into_par_iter().map(|i| chain_snapshots(&kernel, run, schedule, i)).collect::<Result<_>>()?;
    let mut snapshots: Vec<Vec<Vec<f64>>> = schedule.iter().map(|_| Vec::with_capacity(run.n_chains)).collect();
    for chain in per_chain {
        for (slot, x) in snapshots.iter_mut().zip(chain) {
            slot.push(x);
        }
    }
    Ok(SnapshotSet { schedule: schedule.to_vec(), snapshots, init: run.init.clone() })
}

/// [`run_ensemble`] on a dedicated pool of `threads` workers.
pub fn run_ensemble_with_threads(
    config: KernelConfig,
    target: &TargetDistribution,
    run: &RunSpec,
    schedule: &[usize],
    threads: usize,
) -> Result<SnapshotSet> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| Error::Argument(format!("cannot build a pool of {threads} threads: {e}")))?;
    pool.install(|| run_ensemble(config, target, run, schedule))
}

/// `accepts / n_iters`; unadjusted kernels report 1.
pub fn acceptance_rate(trajectory: &Trajectory) -> Result<f64> {
    let n = trajectory.n_iters();
    if n == 0 {
        return Err(Error::Argument("acceptance rate of a trajectory without transitions".into()));
    }
    if !trajectory.adjusted {
        return Ok(1.0);
    }
    Ok(trajectory.accepts as f64 / n as f64)
}
