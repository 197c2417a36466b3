//! Langevin-type samplers for densities `exp(-U)` with nonsmooth, possibly
//! nonconvex potentials, together with the distances used to measure their
//! convergence.
//!
//! * [`potential`]: targets, conservative fields, proximal maps, reference densities.
//! * [`kernel`]: one transition of MASLA and the baseline samplers.
//! * [`ensemble`]: trajectories and seeded ensembles of independent chains.
//! * [`metrics`]: histograms, total variation and exact Wasserstein-2.

// `!(a <= b)` also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod ensemble;
pub mod error;
pub mod field;
pub mod kernel;
pub mod metrics;
pub mod potential;
pub mod rng;

pub use ensemble::{
    acceptance_rate, burn_in_count, run_chain, run_chain_from, run_ensemble, run_ensemble_with_threads, Init, RunSpec,
    SnapshotSet, Trajectory,
};
pub use error::{Error, Result};
pub use field::{FieldValue, SelectionRule};
pub use kernel::{ChainState, Kernel, KernelConfig, Variant};
pub use metrics::{
    build_histogram, distance_curve, tv_distance, w2_discrete, w2_one_dim, w2_to_density_1d, AxisSpec,
    EmpiricalDistribution, GridSpec, HistogramCounts, Metric, Reference, WeightedPointSet,
};
pub use potential::{CompositeStructure, Potential, ProxPart, TargetDistribution, TargetId, TargetParams};
pub use rng::{ChainSeed, CountingDraws, Draws};
