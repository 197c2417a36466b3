use std::fmt;
use std::str::FromStr;

use rand::seq::index;
use rayon::prelude::*;

use super::{tv_distance, w2_discrete, w2_one_dim, w2_to_density_1d, EmpiricalDistribution, HistogramCounts};
use super::{WeightedPointSet, W2_POINT_CAP};
use crate::ensemble::SnapshotSet;
use crate::error::{Error, Result};
use crate::rng::ChainSeed;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Metric {
    Tv,
    W2,
}

impl Metric {
    pub const ALL: [Metric; 2] = [Metric::Tv, Metric::W2];

    pub fn id(&self) -> &'static str {
        match self {
            Metric::Tv => "tv",
            Metric::W2 => "w2",
        }
    }
}

impl fmt::Display for Metric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.id())
    }
}

impl FromStr for Metric {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL.into_iter().find(|m| m.id() == s).ok_or_else(|| Error::UnknownId {
            kind: "metric",
            id: s.to_string(),
            valid: Self::ALL.map(|m| m.id()).join(", "),
        })
    }
}

/// What a convergence curve measures distance to.
#[derive(Debug, Clone)]
pub enum Reference {
    /// Bin masses on a grid (a reference density or a pooled histogram).
    Grid(EmpiricalDistribution),
    /// A sample of the target.
    Points(WeightedPointSet),
}

/// At most `cap` of `points`, drawn uniformly without replacement and kept in
/// their original order.
pub fn subsample(points: &[Vec<f64>], cap: usize, seed: u64) -> Vec<Vec<f64>> {
    if points.len() <= cap {
        return points.to_vec();
    }
    let mut rng = ChainSeed::new(seed, 0).rng();
    let mut picked = index::sample(&mut rng, points.len(), cap).into_vec();
    picked.sort_unstable();
    picked.into_iter().map(|i| points[i].clone()).collect()
}

fn distance(snapshot: &[Vec<f64>], reference: &Reference, metric: Metric, seed: u64) -> Result<f64> {
    match (metric, reference) {
        (Metric::Tv, Reference::Grid(r)) => {
            let counts = HistogramCounts::accumulate(snapshot.iter().map(Vec::as_slice), r.grid());
            if counts.in_range() == 0 {
                // Every chain has left the grid: the supports are disjoint.
                return Ok(1.0);
            }
            tv_distance(&counts.normalize(r.grid().clone())?, r)
        }
        (Metric::Tv, Reference::Points(_)) => {
            Err(Error::Argument("total variation needs a grid reference, not a point set".into()))
        }
        (Metric::W2, _) if snapshot.iter().flatten().any(|v| !v.is_finite()) => {
            // A chain that overflowed puts mass at infinity.
            Ok(f64::INFINITY)
        }
        (Metric::W2, Reference::Grid(r)) => {
            if r.grid().dim() != 1 {
                return Err(Error::Argument("W2 against a grid reference is only defined in one dimension".into()));
            }
            let xs: Vec<f64> = snapshot.iter().map(|p| p[0]).collect();
            w2_to_density_1d(&xs, r)
        }
        (Metric::W2, Reference::Points(r)) => {
            let points = subsample(snapshot, W2_POINT_CAP, seed);
            if r.dim() == 1 && r.is_uniform() {
                let a: Vec<f64> = points.iter().map(|p| p[0]).collect();
                let b: Vec<f64> = r.points().iter().map(|p| p[0]).collect();
                w2_one_dim(&a, &b)
            } else {
                w2_discrete(&WeightedPointSet::uniform(points)?, r)
            }
        }
    }
}

/// `(iteration, distance)` for every snapshot, in schedule order. Snapshots
/// larger than the transport cap are subsampled with `seed`.
pub fn distance_curve(
    snapshots: &SnapshotSet,
    reference: &Reference,
    metric: Metric,
    seed: u64,
) -> Result<Vec<(usize, f64)>> {
    snapshots
        .schedule
        .par_iter()
        .zip(snapshots.snapshots.par_iter())
        .map(|(&k, snap)| Ok((k, distance(snap, reference, metric, seed)?)))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ensemble::Init;
    use crate::metrics::{build_histogram, GridSpec};

    fn snaps(points: Vec<Vec<Vec<f64>>>) -> SnapshotSet {
        SnapshotSet { schedule: (0..points.len()).collect(), snapshots: points, init: Init::Point(vec![0.0]) }
    }

    #[test]
    fn identical_snapshot_has_zero_distance() {
        let pts = vec![vec![0.1], vec![0.7], vec![-1.2]];
        let s = snaps(vec![pts.clone(), vec![vec![5.0]; 3]]);
        let r = Reference::Points(WeightedPointSet::uniform(pts.clone()).unwrap());
        let c = distance_curve(&s, &r, Metric::W2, 0).unwrap();
        assert_eq!(c.len(), 2);
        assert_eq!(c[0], (0, 0.0));
        assert!(c[1].1 > 4.0);

        let grid = GridSpec::uniform(&[(-3.0, 3.0, 12)]).unwrap();
        let r = Reference::Grid(build_histogram(&pts, &grid).unwrap());
        let c = distance_curve(&s, &r, Metric::Tv, 0).unwrap();
        assert_eq!(c[0], (0, 0.0));
        assert_eq!(c[1].1, 1.0);
    }

    #[test]
    fn incompatible_reference_is_rejected() {
        let s = snaps(vec![vec![vec![0.0, 0.0]]]);
        let r = Reference::Points(WeightedPointSet::uniform(vec![vec![0.0, 0.0]]).unwrap());
        assert!(distance_curve(&s, &r, Metric::Tv, 0).is_err());
        let grid = GridSpec::uniform(&[(-1.0, 1.0, 2), (-1.0, 1.0, 2)]).unwrap();
        let r = Reference::Grid(build_histogram(&[vec![0.0, 0.0]], &grid).unwrap());
        assert!(distance_curve(&s, &r, Metric::W2, 0).is_err());
    }

    #[test]
    fn overflowed_chains_are_infinitely_far() {
        let s = snaps(vec![vec![vec![0.0], vec![f64::NEG_INFINITY]], vec![vec![0.0], vec![f64::NAN]]]);
        let r = Reference::Points(WeightedPointSet::uniform(vec![vec![0.0]]).unwrap());
        let c = distance_curve(&s, &r, Metric::W2, 0).unwrap();
        assert!(c.iter().all(|&(_, v)| v == f64::INFINITY));
    }

    #[test]
    fn subsample_is_deterministic_and_capped() {
        let pts: Vec<Vec<f64>> = (0..100).map(|i| vec![i as f64]).collect();
        let a = subsample(&pts, 10, 7);
        assert_eq!(a.len(), 10);
        assert_eq!(a, subsample(&pts, 10, 7));
        assert!(a.windows(2).all(|w| w[0][0] < w[1][0]));
        assert_eq!(subsample(&pts, 200, 7).len(), 100);
    }

    #[test]
    fn metric_ids() {
        assert_eq!("tv".parse::<Metric>().unwrap(), Metric::Tv);
        assert!("w1".parse::<Metric>().is_err());
    }
}
