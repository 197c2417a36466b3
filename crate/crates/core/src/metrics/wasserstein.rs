use super::transport::{self, TransportProblem};
use super::EmpiricalDistribution;
use crate::error::{Error, Result};

/// Largest marginal accepted by [`w2_discrete`].
pub const W2_POINT_CAP: usize = 2000;

/// A discrete probability measure: points with non-negative weights summing to 1.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightedPointSet {
    points: Vec<Vec<f64>>,
    weights: Vec<f64>,
    uniform: bool,
}

impl WeightedPointSet {
    pub fn new(points: Vec<Vec<f64>>, weights: Vec<f64>) -> Result<Self> {
        Self::check_points(&points)?;
        if weights.len() != points.len() {
            return Err(Error::Argument(format!("{} weights for {} points", weights.len(), points.len())));
        }
        if weights.iter().any(|w| !(*w >= 0.0 && w.is_finite())) {
            return Err(Error::Argument("weights must be finite and non-negative".into()));
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::Argument(format!("weights sum to {total}, not 1")));
        }
        Ok(Self { points, weights, uniform: false })
    }

    /// Equal weight `1/n` on each point.
    pub fn uniform(points: Vec<Vec<f64>>) -> Result<Self> {
        Self::check_points(&points)?;
        let w = 1.0 / points.len() as f64;
        Ok(Self { weights: vec![w; points.len()], points, uniform: true })
    }

    fn check_points(points: &[Vec<f64>]) -> Result<()> {
        let Some(first) = points.first() else {
            return Err(Error::Argument("point set is empty".into()));
        };
        if let Some(p) = points.iter().find(|p| p.len() != first.len()) {
            return Err(Error::DimensionMismatch { expected: first.len(), got: p.len() });
        }
        if points.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::Argument("points must be finite".into()));
        }
        Ok(())
    }

    pub fn points(&self) -> &[Vec<f64>] {
        &self.points
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.points[0].len()
    }

    pub fn is_uniform(&self) -> bool {
        self.uniform
    }
}

fn sorted(xs: &[f64]) -> Result<Vec<f64>> {
    if xs.is_empty() {
        return Err(Error::Argument("W2 needs non-empty samples".into()));
    }
    if xs.iter().any(|v| !v.is_finite()) {
        return Err(Error::Argument("samples must be finite".into()));
    }
    let mut v = xs.to_vec();
    v.sort_by(f64::total_cmp);
    Ok(v)
}

/// Exact W2 between the empirical measures of two samples on the line.
///
/// The monotone coupling is integrated over the merged breakpoints `i/n` and
/// `j/m` of the two quantile functions, so unequal sizes are handled exactly;
/// equal sizes reduce to pairing sorted samples.
pub fn w2_one_dim(a: &[f64], b: &[f64]) -> Result<f64> {
    let (a, b) = (sorted(a)?, sorted(b)?);
    let (n, m) = (a.len(), b.len());
    if n == m {
        let s: f64 = a.iter().zip(&b).map(|(x, y)| (x - y) * (x - y)).sum();
        return Ok((s / n as f64).sqrt());
    }
    // Walk the merged grid {i/n} ∪ {j/m} in integer units of 1/(n m).
    let (mut i, mut j) = (0usize, 0usize);
    let (mut pos, mut acc) = (0u128, 0.0);
    let (nn, mm) = (n as u128, m as u128);
    while i < n && j < m {
        let next_a = (i as u128 + 1) * mm;
        let next_b = (j as u128 + 1) * nn;
        let next = next_a.min(next_b);
        let d = a[i] - b[j];
        acc += d * d * (next - pos) as f64;
        pos = next;
        if next == next_a {
            i += 1;
        }
        if next == next_b {
            j += 1;
        }
    }
    Ok((acc / (nn * mm) as f64).sqrt())
}

/// Exact W2 between the empirical measure of `samples` and the density that is
/// constant on each bin of a one-dimensional distribution.
pub fn w2_to_density_1d(samples: &[f64], reference: &EmpiricalDistribution) -> Result<f64> {
    let xs = sorted(samples)?;
    let cdf = reference.cdf_1d()?;
    let axis = reference.grid().axes()[0];
    let masses = reference.masses();
    let n = xs.len();
    let mut acc = 0.0;
    let mut k = 0usize;
    let mut u = 0.0;
    for (bin, &mass) in masses.iter().enumerate() {
        if mass <= 0.0 {
            continue;
        }
        let (x0, x1) = axis.bin_edges(bin);
        let (u0, u1) = (cdf[bin], if bin + 1 == masses.len() { 1.0 } else { cdf[bin + 1] });
        let quantile = |t: f64| x0 + (x1 - x0) * ((t - u0) / (u1 - u0)).clamp(0.0, 1.0);
        while u < u1 && k < n {
            let sample_end = (k + 1) as f64 / n as f64;
            let end = sample_end.min(u1);
            if end > u {
                let (q0, q1) = (quantile(u), quantile(end));
                let (d0, d1) = (xs[k] - q0, xs[k] - q1);
                acc += (end - u) * (d0 * d0 + d0 * d1 + d1 * d1) / 3.0;
            }
            u = end;
            if end >= sample_end {
                k += 1;
            }
        }
    }
    Ok(acc.max(0.0).sqrt())
}

/// Exact W2 between two discrete measures via the transportation simplex.
pub fn w2_discrete(mu: &WeightedPointSet, nu: &WeightedPointSet) -> Result<f64> {
    for set in [mu, nu] {
        if set.len() > W2_POINT_CAP {
            return Err(Error::TooManyPoints { got: set.len(), cap: W2_POINT_CAP });
        }
    }
    if mu.dim() != nu.dim() {
        return Err(Error::DimensionMismatch { expected: mu.dim(), got: nu.dim() });
    }
    let (n, m) = (mu.len(), nu.len());
    let mut cost = Vec::with_capacity(n * m);
    for p in mu.points() {
        for q in nu.points() {
            cost.push(p.iter().zip(q).map(|(a, b)| (a - b) * (a - b)).sum::<f64>());
        }
    }
    let value = if mu.is_uniform() && nu.is_uniform() {
        // Integer supplies keep every pivot exact: each source ships m units and
        // each sink receives n.
        let problem = TransportProblem::new(vec![m as f64; n], vec![n as f64; m], cost)?;
        transport::solve(&problem)?.cost / (n * m) as f64
    } else {
        let problem = TransportProblem::new(mu.weights().to_vec(), nu.weights().to_vec(), cost)?;
        transport::solve(&problem)?.cost
    };
    Ok(value.max(0.0).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metrics::GridSpec;

    #[test]
    fn one_dim_examples() {
        assert_eq!(w2_one_dim(&[0.3, -1.0], &[-1.0, 0.3]).unwrap(), 0.0);
        assert_eq!(w2_one_dim(&[2.0], &[-1.5]).unwrap(), 3.5);
        assert_eq!(w2_one_dim(&[0.0, 1.0], &[1.0, 2.0]).unwrap(), 1.0);
        assert!(w2_one_dim(&[], &[1.0]).is_err());
    }

    #[test]
    fn unequal_sizes_use_the_quantile_coupling() {
        // Quantiles of {0, 1} vs {0, 0, 3}: on [0,1/3] 0-0, [1/3,1/2] 0-0,
        // [1/2,2/3] 1-0, [2/3,1] 1-3 -> (1/6)*1 + (1/3)*4 = 3/2.
        let w = w2_one_dim(&[1.0, 0.0], &[0.0, 3.0, 0.0]).unwrap();
        assert!((w - 1.5f64.sqrt()).abs() < 1e-15);
        // One point against many is the root mean square distance.
        let w = w2_one_dim(&[1.0], &[0.0, 2.0, 4.0]).unwrap();
        assert!((w - ((1.0 + 1.0 + 9.0) / 3.0f64).sqrt()).abs() < 1e-15);
    }

    #[test]
    fn density_reference_uniform_bin() {
        // Uniform on [0,1] against a Dirac at c: W2^2 = 1/3 - c + c^2.
        let grid = GridSpec::uniform(&[(0.0, 1.0, 1)]).unwrap();
        let r = EmpiricalDistribution::from_masses(grid, vec![1.0]).unwrap();
        for c in [0.0, 0.25, 0.5, 2.0] {
            let w = w2_to_density_1d(&[c], &r).unwrap();
            assert!((w * w - (1.0 / 3.0 - c + c * c)).abs() < 1e-14, "c={c}");
        }
        // Two samples at the quartile midpoints: W2^2 = 2 * ∫_0^{1/2} (u - 1/4)^2 du = 1/48.
        let w = w2_to_density_1d(&[0.75, 0.25], &r).unwrap();
        assert!((w * w - 1.0 / 48.0).abs() < 1e-15);
    }

    #[test]
    fn density_reference_skips_empty_bins() {
        let grid = GridSpec::uniform(&[(0.0, 4.0, 4)]).unwrap();
        let r = EmpiricalDistribution::from_masses(grid, vec![0.5, 0.0, 0.0, 0.5]).unwrap();
        // Uniform on [0,1] ∪ [3,4] against samples at 0.5 and 3.5.
        let w = w2_to_density_1d(&[0.5, 3.5], &r).unwrap();
        assert!((w * w - 1.0 / 12.0).abs() < 1e-14);
    }

    #[test]
    fn weighted_set_validation() {
        assert!(WeightedPointSet::new(vec![vec![0.0]], vec![0.5]).is_err());
        assert!(WeightedPointSet::new(vec![vec![0.0], vec![1.0]], vec![0.5, -0.5]).is_err());
        assert!(WeightedPointSet::uniform(vec![]).is_err());
        assert!(WeightedPointSet::uniform(vec![vec![0.0], vec![1.0, 2.0]]).is_err());
    }

    #[test]
    fn dirac_pair_in_the_plane() {
        let a = WeightedPointSet::uniform(vec![vec![0.0, 0.0]]).unwrap();
        let b = WeightedPointSet::uniform(vec![vec![3.0, 4.0]]).unwrap();
        assert!((w2_discrete(&a, &b).unwrap() - 5.0).abs() < 1e-15);
        assert_eq!(w2_discrete(&a, &a).unwrap(), 0.0);
    }

    #[test]
    fn cap_is_enforced() {
        let big = WeightedPointSet::uniform(vec![vec![0.0]; W2_POINT_CAP + 1]).unwrap();
        let one = WeightedPointSet::uniform(vec![vec![0.0]]).unwrap();
        assert!(matches!(w2_discrete(&big, &one), Err(Error::TooManyPoints { .. })));
    }
}
