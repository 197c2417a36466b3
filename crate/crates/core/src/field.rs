//! Set-valued field values and rules for picking one element.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::rng::Draws;

/// Largest generator list for which the exact minimum-norm search is run.
const MAX_HULL_GENERATORS: usize = 12;

/// The value of a conservative field at one point: a nonempty compact set.
#[derive(Debug, Clone, PartialEq)]
pub enum FieldValue {
    Singleton(Vec<f64>),
    /// A closed interval of the real line (one-dimensional targets only).
    Interval {
        lo: f64,
        hi: f64,
    },
    /// Convex hull of finitely many points.
    Hull(Vec<Vec<f64>>),
}

impl FieldValue {
    pub fn singleton(v: Vec<f64>) -> Self {
        FieldValue::Singleton(v)
    }

    pub fn interval(lo: f64, hi: f64) -> Result<Self> {
        if !(lo <= hi) {
            return Err(Error::Argument(format!("interval requires lo <= hi, got [{lo}, {hi}]")));
        }
        Ok(FieldValue::Interval { lo, hi })
    }

    pub fn hull(generators: Vec<Vec<f64>>) -> Result<Self> {
        let Some(first) = generators.first() else {
            return Err(Error::Argument("hull needs at least one generator".into()));
        };
        let d = first.len();
        if generators.iter().any(|g| g.len() != d) {
            return Err(Error::Argument("hull generators differ in dimension".into()));
        }
        if generators.len() > MAX_HULL_GENERATORS {
            return Err(Error::Argument(format!(
                "hull with {} generators exceeds the supported {MAX_HULL_GENERATORS}",
                generators.len()
            )));
        }
        Ok(FieldValue::Hull(generators))
    }

    pub fn dim(&self) -> usize {
        match self {
            FieldValue::Singleton(v) => v.len(),
            FieldValue::Interval { .. } => 1,
            FieldValue::Hull(g) => g[0].len(),
        }
    }

    pub fn is_singleton(&self) -> bool {
        match self {
            FieldValue::Singleton(_) => true,
            FieldValue::Interval { lo, hi } => lo == hi,
            FieldValue::Hull(g) => g.iter().all(|p| p == &g[0]),
        }
    }

    /// The single element, if the set has exactly one.
    pub fn as_singleton(&self) -> Option<Vec<f64>> {
        if !self.is_singleton() {
            return None;
        }
        Some(match self {
            FieldValue::Singleton(v) => v.clone(),
            FieldValue::Interval { lo, .. } => vec![*lo],
            FieldValue::Hull(g) => g[0].clone(),
        })
    }

    /// Element of smallest Euclidean norm.
    pub fn min_norm(&self) -> Vec<f64> {
        match self {
            FieldValue::Singleton(v) => v.clone(),
            FieldValue::Interval { lo, hi } => vec![0.0_f64.clamp(*lo, *hi)],
            FieldValue::Hull(g) => min_norm_in_hull(g),
        }
    }

    /// Euclidean distance from `v` to the set.
    pub fn distance(&self, v: &[f64]) -> f64 {
        match self {
            FieldValue::Singleton(s) => norm(&sub(v, s)),
            FieldValue::Interval { lo, hi } => {
                let x = v[0];
                if x < *lo {
                    lo - x
                } else if x > *hi {
                    x - hi
                } else {
                    0.0
                }
            }
            FieldValue::Hull(g) => {
                let shifted: Vec<Vec<f64>> = g.iter().map(|p| sub(p, v)).collect();
                norm(&min_norm_in_hull(&shifted))
            }
        }
    }

    /// Membership up to an absolute tolerance.
    pub fn contains(&self, v: &[f64], tol: f64) -> bool {
        v.len() == self.dim() && self.distance(v) <= tol
    }

    /// Picks one element according to `rule`.
    ///
    /// Draws are consumed only for `UniformRandom` on a set with more than one
    /// element: one uniform for an interval, one per generator for a hull.
    pub fn select<D: Draws + ?Sized>(&self, rule: SelectionRule, draws: &mut D) -> Vec<f64> {
        if let Some(v) = self.as_singleton() {
            return v;
        }
        match (self, rule) {
            (_, SelectionRule::MinNorm) => self.min_norm(),
            (FieldValue::Interval { lo, .. }, SelectionRule::LeftExtreme) => vec![*lo],
            (FieldValue::Interval { hi, .. }, SelectionRule::RightExtreme) => vec![*hi],
            (FieldValue::Interval { lo, hi }, SelectionRule::UniformRandom) => {
                let u = draws.uniform();
                vec![(lo + u * (hi - lo)).min(*hi)]
            }
            (FieldValue::Hull(g), SelectionRule::LeftExtreme) => g[0].clone(),
            (FieldValue::Hull(g), SelectionRule::RightExtreme) => g[g.len() - 1].clone(),
            (FieldValue::Hull(g), SelectionRule::UniformRandom) => {
                // Flat Dirichlet weights from normalized exponential spacings.
                let w: Vec<f64> = g.iter().map(|_| -(1.0 - draws.uniform()).ln()).collect();
                let total: f64 = w.iter().sum();
                let mut out = vec![0.0; g[0].len()];
                for (p, wi) in g.iter().zip(&w) {
                    for (o, pi) in out.iter_mut().zip(p) {
                        *o += wi / total * pi;
                    }
                }
                out
            }
            (FieldValue::Singleton(v), _) => v.clone(),
        }
    }
}

/// Which element of a set-valued field a sampler uses as its drift.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum SelectionRule {
    #[default]
    MinNorm,
    LeftExtreme,
    RightExtreme,
    UniformRandom,
}

impl SelectionRule {
    pub const ALL: [SelectionRule; 4] =
        [SelectionRule::MinNorm, SelectionRule::LeftExtreme, SelectionRule::RightExtreme, SelectionRule::UniformRandom];

    pub fn id(&self) -> &'static str {
        match self {
            SelectionRule::MinNorm => "min_norm",
            SelectionRule::LeftExtreme => "left_extreme",
            SelectionRule::RightExtreme => "right_extreme",
            SelectionRule::UniformRandom => "uniform_random",
        }
    }
}

impl fmt::Display for SelectionRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.id())
    }
}

impl FromStr for SelectionRule {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL.into_iter().find(|r| r.id() == s).ok_or_else(|| Error::UnknownId {
            kind: "selection rule",
            id: s.to_string(),
            valid: Self::ALL.map(|r| r.id()).join(", "),
        })
    }
}

fn sub(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

fn norm(a: &[f64]) -> f64 {
    a.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Minimum-norm point of `conv(generators)`.
///
/// Enumerates affinely independent subsets; the optimum is the affine
/// minimum-norm point of the face containing it in its relative interior.
fn min_norm_in_hull(generators: &[Vec<f64>]) -> Vec<f64> {
    let n = generators.len();
    let mut best: Option<(f64, Vec<f64>)> = None;
    for mask in 1u32..(1u32 << n) {
        let subset: Vec<&Vec<f64>> = (0..n).filter(|i| mask & (1 << i) != 0).map(|i| &generators[i]).collect();
        let Some(weights) = affine_min_norm_weights(&subset) else {
            continue;
        };
        if weights.iter().any(|&w| w < -1e-12) {
            continue;
        }
        let mut point = vec![0.0; subset[0].len()];
        for (g, w) in subset.iter().zip(&weights) {
            for (p, gi) in point.iter_mut().zip(g.iter()) {
                *p += w * gi;
            }
        }
        let nrm = norm(&point);
        if best.as_ref().is_none_or(|(b, _)| nrm < *b) {
            best = Some((nrm, point));
        }
    }
    best.map(|(_, p)| p).unwrap_or_else(|| generators[0].clone())
}

/// Barycentric weights of the minimum-norm point of the affine hull of
/// `points`; `None` when the points are affinely dependent.
fn affine_min_norm_weights(points: &[&Vec<f64>]) -> Option<Vec<f64>> {
    let k = points.len() - 1;
    if k == 0 {
        return Some(vec![1.0]);
    }
    let base = points[0];
    let dirs: Vec<Vec<f64>> = points[1..].iter().map(|p| sub(p, base)).collect();
    let mut gram = vec![vec![0.0; k + 1]; k];
    for i in 0..k {
        for j in 0..k {
            gram[i][j] = dot(&dirs[i], &dirs[j]);
        }
        gram[i][k] = -dot(&dirs[i], base);
    }
    let scale = gram.iter().map(|r| r[..k].iter().fold(0.0_f64, |m, v| m.max(v.abs()))).fold(0.0, f64::max);
    let coef = solve_augmented(gram, scale * 1e-12)?;
    let mut w = Vec::with_capacity(k + 1);
    w.push(1.0 - coef.iter().sum::<f64>());
    w.extend(coef);
    Some(w)
}

/// Gaussian elimination with partial pivoting on an augmented `k x (k+1)` system.
fn solve_augmented(mut a: Vec<Vec<f64>>, tiny: f64) -> Option<Vec<f64>> {
    let k = a.len();
    for col in 0..k {
        let piv = (col..k).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))?;
        if a[piv][col].abs() <= tiny {
            return None;
        }
        a.swap(col, piv);
        for row in col + 1..k {
            let f = a[row][col] / a[col][col];
            let (top, rest) = a.split_at_mut(row);
            for (r, p) in rest[0][col..=k].iter_mut().zip(&top[col][col..=k]) {
                *r -= f * p;
            }
        }
    }
    let mut x = vec![0.0; k];
    for row in (0..k).rev() {
        let s: f64 = (row + 1..k).map(|c| a[row][c] * x[c]).sum();
        x[row] = (a[row][k] - s) / a[row][row];
    }
    Some(x)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{ChainSeed, CountingDraws};
    use proptest::prelude::*;

    #[test]
    fn interval_rejects_reversed_bounds() {
        assert!(FieldValue::interval(1.0, -1.0).is_err());
        assert!(FieldValue::interval(2.0, 2.0).unwrap().is_singleton());
    }

    #[test]
    fn interval_selection() {
        let set = FieldValue::interval(-2.0, 2.0).unwrap();
        let mut d = CountingDraws::new(ChainSeed::from(3).rng());
        assert_eq!(set.select(SelectionRule::MinNorm, &mut d), vec![0.0]);
        assert_eq!(set.select(SelectionRule::LeftExtreme, &mut d), vec![-2.0]);
        assert_eq!(set.select(SelectionRule::RightExtreme, &mut d), vec![2.0]);
        assert_eq!(d.total(), 0);
        let v = set.select(SelectionRule::UniformRandom, &mut d);
        assert!(set.contains(&v, 0.0));
        assert_eq!(d.uniforms, 1);

        let shifted = FieldValue::interval(1.0, 3.0).unwrap();
        assert_eq!(shifted.min_norm(), vec![1.0]);
    }

    #[test]
    fn singleton_never_draws() {
        let set = FieldValue::singleton(vec![1.5, -2.0]);
        let mut d = CountingDraws::new(ChainSeed::from(3).rng());
        for rule in SelectionRule::ALL {
            assert_eq!(set.select(rule, &mut d), vec![1.5, -2.0]);
        }
        assert_eq!(d.total(), 0);
    }

    #[test]
    fn segment_min_norm_is_projection_of_origin() {
        // Segment from (1, -1) to (1, 3): closest point to the origin is (1, 0).
        let set = FieldValue::hull(vec![vec![1.0, -1.0], vec![1.0, 3.0]]).unwrap();
        let p = set.min_norm();
        assert!((p[0] - 1.0).abs() < 1e-15 && p[1].abs() < 1e-15);
        // Segment not straddling the projection: endpoint wins.
        let set = FieldValue::hull(vec![vec![1.0, 1.0], vec![1.0, 3.0]]).unwrap();
        assert_eq!(set.min_norm(), vec![1.0, 1.0]);
    }

    #[test]
    fn triangle_containing_origin() {
        let set = FieldValue::hull(vec![vec![-1.0, -1.0], vec![2.0, -1.0], vec![0.0, 2.0]]).unwrap();
        assert!(norm(&set.min_norm()) < 1e-14);
        assert!(set.contains(&[0.5, 0.0], 1e-14));
        assert!(!set.contains(&[0.0, 2.5], 1e-3));
    }

    proptest! {
        #[test]
        fn selections_are_members(
            pts in prop::collection::vec(prop::collection::vec(-5.0f64..5.0, 2), 1..5),
            seed in 0u64..1000,
        ) {
            let set = FieldValue::hull(pts).unwrap();
            let mut rng = ChainSeed::from(seed).rng();
            for rule in SelectionRule::ALL {
                let v = set.select(rule, &mut rng);
                prop_assert!(set.contains(&v, 1e-9), "{rule} picked {v:?} outside {set:?}");
            }
        }

        #[test]
        fn hull_min_norm_beats_every_generator_mix(
            pts in prop::collection::vec(prop::collection::vec(-5.0f64..5.0, 2), 2..5),
            w in prop::collection::vec(0.01f64..1.0, 5),
        ) {
            let set = FieldValue::hull(pts.clone()).unwrap();
            let best = norm(&set.min_norm());
            let total: f64 = w[..pts.len()].iter().sum();
            let mut mix = [0.0; 2];
            for (p, wi) in pts.iter().zip(&w) {
                mix[0] += wi / total * p[0];
                mix[1] += wi / total * p[1];
            }
            prop_assert!(best <= norm(&mix) + 1e-9);
        }
    }
}
