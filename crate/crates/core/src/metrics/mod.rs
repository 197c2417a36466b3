//! Histograms, total variation and Wasserstein-2 distances.

mod curve;
pub mod transport;
mod wasserstein;

pub use curve::{distance_curve, subsample, Metric, Reference};
pub use wasserstein::{w2_discrete, w2_one_dim, w2_to_density_1d, WeightedPointSet, W2_POINT_CAP};

use crate::error::{Error, Result};

/// One axis of a rectangular grid: `bins` equal bins on `[lo, hi]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AxisSpec {
    pub lo: f64,
    pub hi: f64,
    pub bins: usize,
}

impl AxisSpec {
    pub fn new(lo: f64, hi: f64, bins: usize) -> Result<Self> {
        if !(lo.is_finite() && hi.is_finite() && lo < hi) {
            return Err(Error::Argument(format!("axis bounds must be finite with lo < hi, got [{lo}, {hi}]")));
        }
        if bins == 0 {
            return Err(Error::Argument("bin count must be positive".into()));
        }
        Ok(Self { lo, hi, bins })
    }

    pub fn width(&self) -> f64 {
        (self.hi - self.lo) / self.bins as f64
    }

    pub fn bin_edges(&self, i: usize) -> (f64, f64) {
        let lo = self.lo + self.width() * i as f64;
        let hi = if i + 1 == self.bins { self.hi } else { self.lo + self.width() * (i + 1) as f64 };
        (lo, hi)
    }

    pub fn center(&self, i: usize) -> f64 {
        let (a, b) = self.bin_edges(i);
        0.5 * (a + b)
    }

    /// Half-open bins `[a, b)`, except the last one which also holds `hi`.
    pub fn index(&self, x: f64) -> Option<usize> {
        if !(x >= self.lo && x <= self.hi) {
            return None;
        }
        let i = ((x - self.lo) / (self.hi - self.lo) * self.bins as f64).floor() as usize;
        Some(i.min(self.bins - 1))
    }
}

/// Rectangular grid; bins are flattened row-major (first axis slowest).
#[derive(Debug, Clone, PartialEq)]
pub struct GridSpec {
    axes: Vec<AxisSpec>,
}

impl GridSpec {
    pub fn new(axes: Vec<AxisSpec>) -> Result<Self> {
        if axes.is_empty() {
            return Err(Error::Argument("grid needs at least one axis".into()));
        }
        Ok(Self { axes })
    }

    /// Grid from `(lo, hi, bins)` triples.
    pub fn uniform(axes: &[(f64, f64, usize)]) -> Result<Self> {
        Self::new(axes.iter().map(|&(lo, hi, n)| AxisSpec::new(lo, hi, n)).collect::<Result<_>>()?)
    }

    pub(crate) fn uniform_1d(lo: f64, hi: f64, bins: usize) -> Self {
        Self { axes: vec![AxisSpec { lo, hi, bins }] }
    }

    pub fn axes(&self) -> &[AxisSpec] {
        &self.axes
    }

    pub fn dim(&self) -> usize {
        self.axes.len()
    }

    pub fn n_bins(&self) -> usize {
        self.axes.iter().map(|a| a.bins).product()
    }

    pub fn index(&self, x: &[f64]) -> Option<usize> {
        if x.len() != self.dim() {
            return None;
        }
        let mut flat = 0;
        for (ax, &v) in self.axes.iter().zip(x) {
            flat = flat * ax.bins + ax.index(v)?;
        }
        Some(flat)
    }

    pub fn center(&self, mut flat: usize) -> Vec<f64> {
        let mut out = vec![0.0; self.dim()];
        for (k, ax) in self.axes.iter().enumerate().rev() {
            out[k] = ax.center(flat % ax.bins);
            flat /= ax.bins;
        }
        out
    }
}

/// Integer bin counts before normalization.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HistogramCounts {
    pub counts: Vec<u64>,
    pub dropped: u64,
}

impl HistogramCounts {
    pub fn accumulate<'a, I>(samples: I, grid: &GridSpec) -> Self
    where
        I: IntoIterator<Item = &'a [f64]>,
    {
        let mut counts = vec![0u64; grid.n_bins()];
        let mut dropped = 0;
        for x in samples {
            match grid.index(x) {
                Some(i) => counts[i] += 1,
                None => dropped += 1,
            }
        }
        Self { counts, dropped }
    }

    pub fn in_range(&self) -> u64 {
        self.counts.iter().sum()
    }

    pub fn normalize(self, grid: GridSpec) -> Result<EmpiricalDistribution> {
        let total = self.in_range();
        if total == 0 {
            return Err(Error::Argument(format!("no samples inside the grid ({} dropped)", self.dropped)));
        }
        let masses = self.counts.iter().map(|&c| c as f64 / total as f64).collect();
        Ok(EmpiricalDistribution { grid, counts: Some(self.counts), masses, dropped: self.dropped })
    }
}

/// Probability masses on a grid, either counted from samples or integrated
/// from a density (then `counts` is `None`).
#[derive(Debug, Clone, PartialEq)]
pub struct EmpiricalDistribution {
    grid: GridSpec,
    counts: Option<Vec<u64>>,
    masses: Vec<f64>,
    dropped: u64,
}

impl EmpiricalDistribution {
    pub fn from_masses(grid: GridSpec, masses: Vec<f64>) -> Result<Self> {
        if masses.len() != grid.n_bins() {
            return Err(Error::Argument(format!("{} masses for {} bins", masses.len(), grid.n_bins())));
        }
        if masses.iter().any(|m| !(*m >= 0.0)) {
            return Err(Error::Argument("masses must be non-negative".into()));
        }
        let total: f64 = masses.iter().sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::Argument(format!("masses sum to {total}, not 1")));
        }
        Ok(Self { grid, counts: None, masses, dropped: 0 })
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn counts(&self) -> Option<&[u64]> {
        self.counts.as_deref()
    }

    pub fn masses(&self) -> &[f64] {
        &self.masses
    }

    pub fn dropped(&self) -> u64 {
        self.dropped
    }

    /// Cumulative mass at the bin edges of a one-dimensional grid.
    pub(crate) fn cdf_1d(&self) -> Result<Vec<f64>> {
        if self.grid.dim() != 1 {
            return Err(Error::Argument("cumulative mass needs a one-dimensional grid".into()));
        }
        let mut cdf = Vec::with_capacity(self.masses.len() + 1);
        let mut acc = 0.0;
        cdf.push(0.0);
        for m in &self.masses {
            acc += m;
            cdf.push(acc);
        }
        Ok(cdf)
    }
}

/// Histogram of `samples` on `grid`; samples outside the grid are dropped.
pub fn build_histogram<S: AsRef<[f64]>>(samples: &[S], grid: &GridSpec) -> Result<EmpiricalDistribution> {
    if samples.is_empty() {
        return Err(Error::Argument("cannot build a histogram from zero samples".into()));
    }
    if let Some(bad) = samples.iter().find(|s| s.as_ref().len() != grid.dim()) {
        return Err(Error::DimensionMismatch { expected: grid.dim(), got: bad.as_ref().len() });
    }
    HistogramCounts::accumulate(samples.iter().map(|s| s.as_ref()), grid).normalize(grid.clone())
}

/// `½ Σ |p - q|` over the bins of a shared grid.
pub fn tv_distance(p: &EmpiricalDistribution, q: &EmpiricalDistribution) -> Result<f64> {
    if p.grid != q.grid {
        return Err(Error::Argument("total variation needs both distributions on the same grid".into()));
    }
    let sum: f64 = p.masses.iter().zip(&q.masses).map(|(a, b)| (a - b).abs()).sum();
    Ok((0.5 * sum).min(1.0))
}
