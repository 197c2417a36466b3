use super::{CompositeStructure, Potential, ProxPart};
use crate::error::{Error, Result};
use crate::field::FieldValue;
use crate::metrics::GridSpec;

/// `U(x) = x^4 / 4`, field `{x^3}`.
#[derive(Debug, Clone, Copy, Default)]
pub struct Quartic;

impl Potential for Quartic {
    fn id(&self) -> &str {
        "quartic"
    }

    fn dim(&self) -> usize {
        1
    }

    fn value(&self, x: &[f64]) -> f64 {
        x[0].powi(4) / 4.0
    }

    fn field(&self, x: &[f64]) -> FieldValue {
        FieldValue::Singleton(vec![x[0].powi(3)])
    }

    fn prox_parts(&self) -> &'static [ProxPart] {
        &[ProxPart::Full]
    }

    fn prox(&self, _part: ProxPart, v: &[f64], step: f64) -> Result<Vec<f64>> {
        Ok(vec![solve_monotone_cubic(step, v[0])])
    }

    fn is_convex(&self) -> bool {
        true
    }

    fn default_grid(&self) -> GridSpec {
        GridSpec::uniform_1d(-3.0, 3.0, 400)
    }
}

/// Real root of `s x^3 + x = v` (unique since the left side is increasing).
fn solve_monotone_cubic(s: f64, v: f64) -> f64 {
    if v == 0.0 {
        return 0.0;
    }
    let (mut lo, mut hi) = if v > 0.0 { (0.0, v) } else { (v, 0.0) };
    let mut x = v.signum() * v.abs().min((v.abs() / s).cbrt());
    for _ in 0..200 {
        let f = s * x * x * x + x - v;
        if f == 0.0 {
            return x;
        }
        if f > 0.0 {
            hi = x;
        } else {
            lo = x;
        }
        let newton = x - f / (3.0 * s * x * x + 1.0);
        let next = if newton > lo && newton < hi { newton } else { 0.5 * (lo + hi) };
        if (next - x).abs() <= 1e-16 * x.abs().max(1e-300) {
            return next;
        }
        x = next;
    }
    x
}

/// `U(x) = |x^2 - 1|` with its Clarke subgradient.
#[derive(Debug, Clone, Copy, Default)]
pub struct AbsQuad;

impl AbsQuad {
    fn prox_objective(x: f64, v: f64, s: f64) -> f64 {
        (x * x - 1.0).abs() + (x - v) * (x - v) / (2.0 * s)
    }
}

impl Potential for AbsQuad {
    fn id(&self) -> &str {
        "abs_quad"
    }

    fn dim(&self) -> usize {
        1
    }

    fn value(&self, x: &[f64]) -> f64 {
        (x[0] * x[0] - 1.0).abs()
    }

    fn field(&self, x: &[f64]) -> FieldValue {
        let x = x[0];
        let a = x.abs();
        if a > 1.0 {
            FieldValue::Singleton(vec![2.0 * x])
        } else if a < 1.0 {
            FieldValue::Singleton(vec![-2.0 * x])
        } else if a == 1.0 {
            FieldValue::Interval { lo: -2.0, hi: 2.0 }
        } else {
            FieldValue::Singleton(vec![f64::NAN])
        }
    }

    fn prox_parts(&self) -> &'static [ProxPart] {
        &[ProxPart::Full]
    }

    /// Global minimizer of `|x^2 - 1| + (x - v)^2 / (2 s)` by comparing the
    /// minimizers of the convex and concave pieces; ties are reported.
    fn prox(&self, _part: ProxPart, v: &[f64], s: f64) -> Result<Vec<f64>> {
        let v = v[0];
        if !v.is_finite() {
            return Err(Error::Argument(format!("prox input must be finite, got {v}")));
        }
        if s == 0.5 && v == 0.0 {
            // The objective is constant on [-1, 1].
            return Err(Error::NotUnique { v: vec![v], minimizers: vec![vec![-1.0], vec![1.0]] });
        }
        let mut candidates = vec![-1.0, 1.0];
        // |x| >= 1: convex quadratic with stationary point v / (1 + 2s).
        let outer = v / (1.0 + 2.0 * s);
        candidates.push(outer.max(1.0));
        candidates.push(outer.min(-1.0));
        // |x| <= 1: convex only when s < 1/2.
        if s < 0.5 {
            candidates.push((v / (1.0 - 2.0 * s)).clamp(-1.0, 1.0));
        }
        let best = candidates.iter().map(|&x| Self::prox_objective(x, v, s)).fold(f64::INFINITY, f64::min);
        let tol = 1e-12 * (1.0 + best.abs());
        let mut minimizers: Vec<f64> =
            candidates.into_iter().filter(|&x| Self::prox_objective(x, v, s) <= best + tol).collect();
        minimizers.sort_by(f64::total_cmp);
        minimizers.dedup_by(|a, b| (*a - *b).abs() <= 1e-12);
        if minimizers.len() > 1 {
            return Err(Error::NotUnique { v: vec![v], minimizers: minimizers.into_iter().map(|x| vec![x]).collect() });
        }
        Ok(vec![minimizers[0]])
    }

    fn is_convex(&self) -> bool {
        false
    }

    fn default_grid(&self) -> GridSpec {
        GridSpec::uniform_1d(-3.0, 3.0, 400)
    }
}

/// `U(x) = ||x| - 1|`, piecewise linear with kinks at -1, 0 and 1.
#[derive(Debug, Clone, Copy, Default)]
pub struct Piecewise;

impl Potential for Piecewise {
    fn id(&self) -> &str {
        "piecewise"
    }

    fn dim(&self) -> usize {
        1
    }

    fn value(&self, x: &[f64]) -> f64 {
        let x = x[0];
        if x < -1.0 {
            -x - 1.0
        } else if x < 0.0 {
            x + 1.0
        } else if x < 1.0 {
            1.0 - x
        } else {
            x - 1.0
        }
    }

    fn field(&self, x: &[f64]) -> FieldValue {
        let x = x[0];
        if x == -1.0 || x == 0.0 || x == 1.0 {
            FieldValue::Interval { lo: -1.0, hi: 1.0 }
        } else if x < -1.0 || (0.0 < x && x < 1.0) {
            FieldValue::Singleton(vec![-1.0])
        } else if x.is_nan() {
            FieldValue::Singleton(vec![f64::NAN])
        } else {
            FieldValue::Singleton(vec![1.0])
        }
    }

    fn is_convex(&self) -> bool {
        false
    }

    fn default_grid(&self) -> GridSpec {
        GridSpec::uniform_1d(-16.0, 16.0, 640)
    }
}

/// `U(x) = |x|^2 / 2`, the standard normal in `dim` dimensions.
#[derive(Debug, Clone, Copy)]
pub struct Gaussian {
    dim: usize,
}

impl Gaussian {
    pub fn new(dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(Error::Argument("dimension must be positive".into()));
        }
        Ok(Self { dim })
    }
}

impl Potential for Gaussian {
    fn id(&self) -> &str {
        "gaussian"
    }

    fn dim(&self) -> usize {
        self.dim
    }

    fn value(&self, x: &[f64]) -> f64 {
        x.iter().map(|v| v * v).sum::<f64>() / 2.0
    }

    fn field(&self, x: &[f64]) -> FieldValue {
        FieldValue::Singleton(x.to_vec())
    }

    fn prox_parts(&self) -> &'static [ProxPart] {
        &[ProxPart::Full]
    }

    fn prox(&self, _part: ProxPart, v: &[f64], step: f64) -> Result<Vec<f64>> {
        Ok(v.iter().map(|vi| vi / (1.0 + step)).collect())
    }

    fn is_convex(&self) -> bool {
        true
    }

    fn default_grid(&self) -> GridSpec {
        if self.dim == 2 {
            GridSpec::uniform(&[(-6.0, 6.0, 64), (-6.0, 6.0, 64)]).expect("static grid")
        } else {
            GridSpec::uniform_1d(-6.0, 6.0, 400)
        }
    }
}

/// The two-dimensional TV-L2 posterior.
#[derive(Debug, Clone)]
pub struct TvL2 {
    structure: CompositeStructure,
}

impl TvL2 {
    pub fn new(structure: CompositeStructure) -> Self {
        Self { structure }
    }
}

impl Potential for TvL2 {
    fn id(&self) -> &str {
        "tv_l2"
    }

    fn dim(&self) -> usize {
        2
    }

    fn value(&self, x: &[f64]) -> f64 {
        self.structure.value(x)
    }

    fn field(&self, x: &[f64]) -> FieldValue {
        self.structure.field(x)
    }

    fn prox_parts(&self) -> &'static [ProxPart] {
        &[ProxPart::SmoothPart, ProxPart::GCompK, ProxPart::Full]
    }

    fn prox(&self, part: ProxPart, v: &[f64], step: f64) -> Result<Vec<f64>> {
        Ok(match part {
            ProxPart::SmoothPart => self.structure.prox_smooth(v, step),
            ProxPart::GCompK => self.structure.prox_g_comp_k(v, step),
            ProxPart::Full => self.structure.prox_full(v, step),
        })
    }

    fn composite(&self) -> Option<&CompositeStructure> {
        Some(&self.structure)
    }

    fn is_convex(&self) -> bool {
        true
    }

    fn default_grid(&self) -> GridSpec {
        let y = &self.structure.y_data;
        GridSpec::uniform(&[(y[0] - 3.0, y[0] + 3.0, 128), (y[1] - 3.0, y[1] + 3.0, 128)]).expect("finite data")
    }
}
