//! Configuration, orchestration and file output for the sampler experiments.

pub mod config;
pub mod error;
pub mod experiment;
pub mod figures;

use std::path::PathBuf;

pub use config::{load_config, parse_config, ExperimentConfig, KernelSpec, Mode, PoolSpec, ReferenceKind};
pub use error::{CliError, Result};
pub use experiment::{read_manifest, run_experiment, verify_checksums, Manifest, ResultRow, CURVE_HEADER};
pub use figures::FigureId;

/// Command-line adjustments applied on top of a configuration.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub output_dir: Option<PathBuf>,
    /// Replaces the master seed; a long-run pool is reseeded from it.
    pub seed: Option<u64>,
    pub scale: Option<f64>,
    pub iters: Option<usize>,
}

impl Overrides {
    pub fn apply(&self, config: &mut ExperimentConfig) -> Result<()> {
        if let Some(dir) = &self.output_dir {
            config.output_dir = dir.clone();
        }
        if let Some(seed) = self.seed {
            config.run.master_seed = seed;
            if let Some(pool) = &mut config.pool {
                pool.seed = PoolSpec::default_for(seed).seed;
            }
        }
        if let Some(scale) = self.scale {
            config.scale = scale;
        }
        if let Some(iters) = self.iters {
            config.set_iters(iters);
        }
        config.validate()
    }
}
