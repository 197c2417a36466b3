//! Pre-registered experiments, one per figure.

use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use masla_core::{GridSpec, Init, KernelConfig, Metric, RunSpec, TargetDistribution, TargetId, TargetParams, Variant};

use crate::config::{ExperimentConfig, KernelSpec, Mode, PoolSpec, ReferenceKind, DEFAULT_SEED};
use crate::error::{CliError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum FigureId {
    Fig1,
    Fig2,
    Fig3,
    Fig4,
    Fig5,
}

impl FigureId {
    pub const ALL: [FigureId; 5] = [FigureId::Fig1, FigureId::Fig2, FigureId::Fig3, FigureId::Fig4, FigureId::Fig5];

    pub fn id(&self) -> &'static str {
        match self {
            FigureId::Fig1 => "fig1",
            FigureId::Fig2 => "fig2",
            FigureId::Fig3 => "fig3",
            FigureId::Fig4 => "fig4",
            FigureId::Fig5 => "fig5",
        }
    }

    pub fn description(&self) -> &'static str {
        match self {
            FigureId::Fig1 => "quartic, MALA from 0 and ULA from 5, step 0.1, 10^4 iterations: trajectories",
            FigureId::Fig2 => "quartic, MALA and ULA, step 0.001, 10^5 iterations, 20% burn-in: histograms",
            FigureId::Fig3 => "tv_l2, MASLA/GradSub/ProxSub at tau 1e-3..1e-5, 10^4 chains: W2 curves",
            FigureId::Fig4 => "tv_l2, MASLA/ProxSub/PMALA/MYULA at tau 1e-3..1e-5, 10^4 chains: TV curves",
            FigureId::Fig5 => "abs_quad, USLA and MASLA, step 0.1, 10^5 iterations, 20% burn-in: TV and W2",
        }
    }

    /// The experiment at its nominal size.
    pub fn config(&self) -> ExperimentConfig {
        match self {
            FigureId::Fig1 => {
                let mut c = trajectory(self, TargetId::Quartic, 10_000, 0.0, vec![]);
                c.kernels = vec![
                    kernel(Variant::Mala, 0.1, None).with_init(Init::Point(vec![0.0])),
                    kernel(Variant::Ula, 0.1, None).with_init(Init::Point(vec![5.0])),
                ];
                c.write_trajectories = true;
                c
            }
            FigureId::Fig2 => {
                let mut c = trajectory(self, TargetId::Quartic, 100_000, 0.2, vec![Metric::Tv, Metric::W2]);
                c.kernels = vec![kernel(Variant::Mala, 0.001, None), kernel(Variant::Ula, 0.001, None)];
                c
            }
            FigureId::Fig3 => {
                let mut c = ensemble(self, vec![Metric::W2], ReferenceKind::LongRunPool);
                c.kernels = sweep(&[Variant::Masla, Variant::GradSub, Variant::ProxSub]);
                c
            }
            FigureId::Fig4 => {
                let mut c = ensemble(self, vec![Metric::Tv], ReferenceKind::AnalyticGrid);
                c.kernels = sweep(&[Variant::Masla, Variant::ProxSub, Variant::Pmala, Variant::Myula]);
                c
            }
            FigureId::Fig5 => {
                let mut c = trajectory(self, TargetId::AbsQuad, 100_000, 0.2, vec![Metric::Tv, Metric::W2]);
                c.kernels = vec![kernel(Variant::Usla, 0.1, None), kernel(Variant::Masla, 0.1, None)];
                c
            }
        }
    }
}

impl fmt::Display for FigureId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.id())
    }
}

impl FromStr for FigureId {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL.into_iter().find(|f| f.id() == s).ok_or_else(|| {
            CliError::Config(format!("unknown figure '{s}'; valid ids: {}", Self::ALL.map(|f| f.id()).join(", ")))
        })
    }
}

/// Step sizes of the composite-target comparisons.
pub const TAUS: [f64; 3] = [1e-3, 1e-4, 1e-5];

/// Iterations recorded by the composite-target ensembles.
pub const ENSEMBLE_SCHEDULE: [usize; 5] = [1, 10, 100, 1000, 5000];

/// Coarse grid for histogram-based distances of 10^3..10^4 chains on tv_l2.
pub fn tv_l2_coarse_grid() -> GridSpec {
    GridSpec::uniform(&[(-4.0, 2.0, 12), (-2.0, 4.0, 12)]).expect("valid grid")
}

/// Label of a kernel in a step-size sweep, e.g. `MASLA_tau1e-3`.
pub fn sweep_label(variant: Variant, tau: f64) -> String {
    format!("{}_tau1e{}", variant.id(), tau.log10().round() as i32)
}

impl KernelSpec {
    fn with_init(mut self, init: Init) -> Self {
        self.init = Some(init);
        self
    }
}

fn kernel(variant: Variant, step: f64, label: Option<String>) -> KernelSpec {
    KernelSpec {
        label: label.unwrap_or_else(|| variant.id().to_string()),
        config: KernelConfig::new(variant, step),
        init: None,
    }
}

fn sweep(variants: &[Variant]) -> Vec<KernelSpec> {
    TAUS.iter().flat_map(|&tau| variants.iter().map(move |&v| kernel(v, tau, Some(sweep_label(v, tau))))).collect()
}

fn base(fig: &FigureId, target: TargetId, mode: Mode, run: RunSpec, metrics: Vec<Metric>) -> ExperimentConfig {
    let grid = TargetDistribution::from_id(target, &TargetParams::default()).expect("catalogue target").default_grid();
    ExperimentConfig {
        experiment_id: fig.id().to_string(),
        mode,
        target,
        target_params: TargetParams::default(),
        kernels: Vec::new(),
        run,
        schedule: Vec::new(),
        grid,
        metrics,
        reference: ReferenceKind::AnalyticGrid,
        pool: None,
        scale: 1.0,
        write_trajectories: false,
        output_dir: PathBuf::from("out").join(fig.id()),
    }
}

fn trajectory(
    fig: &FigureId,
    target: TargetId,
    n_iters: usize,
    burn_in: f64,
    metrics: Vec<Metric>,
) -> ExperimentConfig {
    let run = RunSpec {
        n_chains: 1,
        n_iters,
        burn_in_fraction: burn_in,
        master_seed: DEFAULT_SEED,
        init: Init::Point(vec![0.0]),
    };
    base(fig, target, Mode::Trajectory, run, metrics)
}

fn ensemble(fig: &FigureId, metrics: Vec<Metric>, reference: ReferenceKind) -> ExperimentConfig {
    let run = RunSpec {
        n_chains: 10_000,
        n_iters: *ENSEMBLE_SCHEDULE.last().expect("non-empty"),
        burn_in_fraction: 0.0,
        master_seed: DEFAULT_SEED,
        init: Init::Point(vec![-1.0, 1.0]),
    };
    let mut c = base(fig, TargetId::TvL2, Mode::Ensemble, run, metrics);
    c.schedule = ENSEMBLE_SCHEDULE.to_vec();
    c.grid = tv_l2_coarse_grid();
    c.reference = reference;
    if reference == ReferenceKind::LongRunPool {
        c.pool = Some(PoolSpec::default_for(DEFAULT_SEED));
    }
    c
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::parse_config;

    #[test]
    fn catalogue_entries_are_valid_and_round_trip() {
        for fig in FigureId::ALL {
            let c = fig.config();
            c.validate().unwrap_or_else(|e| panic!("{fig}: {e}"));
            assert_eq!(parse_config(&c.to_toml()).unwrap(), c, "{fig}");
        }
    }

    #[test]
    fn sweep_labels() {
        assert_eq!(sweep_label(Variant::Masla, 1e-3), "MASLA_tau1e-3");
        assert_eq!(sweep_label(Variant::Myula, 1e-5), "MYULA_tau1e-5");
        assert_eq!(FigureId::Fig3.config().kernels.len(), 9);
        assert_eq!(FigureId::Fig4.config().kernels.len(), 12);
    }

    #[test]
    fn unknown_figure() {
        let e = "fig9".parse::<FigureId>().unwrap_err().to_string();
        assert!(e.contains("fig1, fig2, fig3, fig4, fig5"), "{e}");
    }
}
