//! Target distributions `pi(x) ∝ exp(-U(x))` described by their potential,
//! a conservative field for it, and optional proximal maps.
//!
//! The catalogue holds the targets used throughout the experiments; new
//! targets plug in by implementing [`Potential`] and wrapping the value with
//! [`TargetDistribution::new`].

mod composite;
mod reference;
mod targets;

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

pub use composite::{soft_threshold, subdiff_g, CompositeStructure};
pub use targets::{AbsQuad, Gaussian, Piecewise, Quartic, TvL2};

use crate::error::{check_dim, check_finite, Error, Result};
use crate::field::{FieldValue, SelectionRule};
use crate::metrics::{EmpiricalDistribution, GridSpec};
use crate::rng::Draws;

/// Which proximal map is requested.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ProxPart {
    /// The smooth data term `F` of a composite target.
    SmoothPart,
    /// The nonsmooth term `G o K` of a composite target.
    GCompK,
    /// The whole potential `U`.
    Full,
}

impl ProxPart {
    pub fn id(&self) -> &'static str {
        match self {
            ProxPart::SmoothPart => "smooth_part",
            ProxPart::GCompK => "g_comp_k",
            ProxPart::Full => "full",
        }
    }
}

/// A potential together with a conservative field for it.
///
/// Implementations must be pure: every method is called concurrently from
/// many chains. Inputs are not validated here; [`TargetDistribution`] does it.
pub trait Potential: Send + Sync + fmt::Debug {
    fn id(&self) -> &str;

    fn dim(&self) -> usize;

    /// `U(x) >= 0`.
    fn value(&self, x: &[f64]) -> f64;

    /// `D_U(x)`; a singleton wherever `U` is differentiable.
    fn field(&self, x: &[f64]) -> FieldValue;

    /// Parts for which [`Potential::prox`] is implemented.
    fn prox_parts(&self) -> &'static [ProxPart] {
        &[]
    }

    fn prox(&self, part: ProxPart, _v: &[f64], _step: f64) -> Result<Vec<f64>> {
        Err(Error::Unsupported(format!("target '{}' has no {} prox", self.id(), part.id())))
    }

    fn composite(&self) -> Option<&CompositeStructure> {
        None
    }

    fn is_convex(&self) -> bool;

    /// Grid capturing essentially all of the mass, used for reference densities.
    fn default_grid(&self) -> GridSpec;
}

/// Parameter overrides for catalogue targets.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct TargetParams {
    pub sigma: Option<f64>,
    pub lambda: Option<f64>,
    pub y_data: Option<Vec<f64>>,
    pub dim: Option<usize>,
}

/// Catalogue identifiers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum TargetId {
    Quartic,
    TvL2,
    AbsQuad,
    Piecewise,
    Gaussian,
}

impl TargetId {
    pub const ALL: [TargetId; 5] =
        [TargetId::Quartic, TargetId::TvL2, TargetId::AbsQuad, TargetId::Piecewise, TargetId::Gaussian];

    pub fn id(&self) -> &'static str {
        match self {
            TargetId::Quartic => "quartic",
            TargetId::TvL2 => "tv_l2",
            TargetId::AbsQuad => "abs_quad",
            TargetId::Piecewise => "piecewise",
            TargetId::Gaussian => "gaussian",
        }
    }

    pub fn description(&self) -> &'static str {
        match self {
            TargetId::Quartic => "U(x) = |x|^4 / 4 on R",
            TargetId::TvL2 => {
                "U(x) = |x - y|^2 / (2 sigma^2) + lambda |x2 - x1| on R^2 (y = (-1, 1), sigma = 1, lambda = 5)"
            }
            TargetId::AbsQuad => "U(x) = |x^2 - 1| on R with its Clarke subgradient",
            TargetId::Piecewise => "U(x) = ||x| - 1| on R with the conservative field [-1, 1] at the kinks",
            TargetId::Gaussian => "U(x) = |x|^2 / 2 on R^d (auxiliary smooth target, dim override)",
        }
    }
}

impl fmt::Display for TargetId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.id())
    }
}

impl FromStr for TargetId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL.into_iter().find(|t| t.id() == s).ok_or_else(|| Error::UnknownId {
            kind: "target",
            id: s.to_string(),
            valid: Self::ALL.map(|t| t.id()).join(", "),
        })
    }
}

/// Shared, immutable handle to a target.
#[derive(Debug, Clone)]
pub struct TargetDistribution {
    inner: Arc<dyn Potential>,
}

impl TargetDistribution {
    pub fn new<P: Potential + 'static>(potential: P) -> Self {
        Self { inner: Arc::new(potential) }
    }

    /// Builds a catalogue target, applying the overrides that target accepts.
    pub fn from_id(id: TargetId, params: &TargetParams) -> Result<Self> {
        let reject = |what: &str| Err(Error::Config(format!("target '{id}' does not accept a {what} override")));
        match id {
            TargetId::TvL2 => {
                if params.dim.is_some() {
                    return reject("dim");
                }
                let y = params.y_data.clone().unwrap_or_else(|| vec![-1.0, 1.0]);
                let c = CompositeStructure::tv_l2(y, params.sigma.unwrap_or(1.0), params.lambda.unwrap_or(5.0))?;
                Ok(Self::new(TvL2::new(c)))
            }
            TargetId::Gaussian => {
                if params.sigma.is_some() || params.lambda.is_some() || params.y_data.is_some() {
                    return reject("sigma/lambda/y_data");
                }
                Ok(Self::new(Gaussian::new(params.dim.unwrap_or(1))?))
            }
            other => {
                if *params != TargetParams::default() {
                    return reject("parameter");
                }
                Ok(match other {
                    TargetId::Quartic => Self::new(Quartic),
                    TargetId::AbsQuad => Self::new(AbsQuad),
                    TargetId::Piecewise => Self::new(Piecewise),
                    TargetId::TvL2 | TargetId::Gaussian => unreachable!(),
                })
            }
        }
    }

    pub fn by_name(name: &str) -> Result<Self> {
        Self::from_id(name.parse()?, &TargetParams::default())
    }

    pub fn potential(&self) -> &dyn Potential {
        self.inner.as_ref()
    }

    pub fn id(&self) -> &str {
        self.inner.id()
    }

    pub fn dim(&self) -> usize {
        self.inner.dim()
    }

    pub fn composite(&self) -> Option<&CompositeStructure> {
        self.inner.composite()
    }

    pub fn is_convex(&self) -> bool {
        self.inner.is_convex()
    }

    pub fn supports_prox(&self, part: ProxPart) -> bool {
        self.inner.prox_parts().contains(&part)
    }

    pub fn default_grid(&self) -> GridSpec {
        self.inner.default_grid()
    }

    fn check_point(&self, x: &[f64]) -> Result<()> {
        check_dim(self.dim(), x)?;
        check_finite(x)
    }

    /// `U(x)`.
    pub fn potential_value(&self, x: &[f64]) -> Result<f64> {
        self.check_point(x)?;
        Ok(self.inner.value(x))
    }

    /// The set `D_U(x)`.
    pub fn field_set(&self, x: &[f64]) -> Result<FieldValue> {
        self.check_point(x)?;
        Ok(self.inner.field(x))
    }

    /// One element of `D_U(x)` picked by `rule`; the gradient wherever the set
    /// is a singleton.
    pub fn field_select<D: Draws + ?Sized>(&self, x: &[f64], rule: SelectionRule, draws: &mut D) -> Result<Vec<f64>> {
        Ok(self.field_set(x)?.select(rule, draws))
    }

    /// `argmin_x part(x) + |x - v|^2 / (2 step)`.
    pub fn prox(&self, part: ProxPart, v: &[f64], step: f64) -> Result<Vec<f64>> {
        self.check_point(v)?;
        if !(step > 0.0 && step.is_finite()) {
            return Err(Error::Argument(format!("prox step must be positive, got {step}")));
        }
        if !self.supports_prox(part) {
            return Err(Error::Unsupported(format!("target '{}' has no {} prox", self.id(), part.id())));
        }
        self.inner.prox(part, v, step)
    }

    /// Bin masses of `pi` on `grid`, each bin integrated by adaptive quadrature.
    pub fn reference_density(&self, grid: &GridSpec) -> Result<EmpiricalDistribution> {
        let integrals = reference::bin_integrals(self.potential(), grid)?;
        let total: f64 = integrals.iter().sum();
        if !(total > 0.0) {
            return Err(Error::Argument("grid carries no probability mass".into()));
        }
        EmpiricalDistribution::from_masses(grid.clone(), integrals.iter().map(|m| m / total).collect())
    }

    /// `∫_grid exp(-U)`: the normalizing constant restricted to the grid.
    pub fn normalizing_constant(&self, grid: &GridSpec) -> Result<f64> {
        Ok(reference::bin_integrals(self.potential(), grid)?.iter().sum())
    }
}
