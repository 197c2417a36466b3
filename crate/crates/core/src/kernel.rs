//! One transition of each sampler.
//!
//! Every variant moves to `mean(x) + scale * z` with `z` standard normal; they
//! differ in the noiseless map `mean` and in whether a Metropolis-Hastings
//! correction follows.
//!
//! | variant | `mean(x)` | scale | corrected |
//! |---|---|---|---|
//! | MASLA, USLA | `x - step * beta(x)`, `beta(x)` selected from `D_U(x)` | `sqrt(2 step)` | MASLA |
//! | MALA, ULA | `x - step * grad U(x)` | `sqrt(2 step)` | MALA |
//! | RWM | `x` | `rwm_scale` | yes |
//! | PMALA | `prox_{step U}(x)` | `sqrt(2 step)` | yes |
//! | ProxSub | `prox_{step F}(x - step K^T y)`, `y` selected from `dG(Kx)` | `sqrt(2 step)` | no |
//! | GradSub | `x - step K^T y - step grad F(x)` | `sqrt(2 step)` | no |
//! | MYULA | `(1 - step/theta) x - step grad F(x) + (step/theta) prox_{theta G o K}(x)` | `sqrt(2 step)` | no |
//!
//! Draw order within a step: the `d` normals of the noise, then the uniform of
//! the accept test (corrected variants only), then any draws needed to select
//! a field element at the new point (`uniform_random` at a kink only).

use std::fmt;
use std::str::FromStr;

use crate::error::{check_dim, check_finite, Error, Result};
use crate::field::{FieldValue, SelectionRule};
use crate::potential::{subdiff_g, ProxPart, TargetDistribution};
use crate::rng::Draws;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Variant {
    Masla,
    Mala,
    Rwm,
    Pmala,
    Ula,
    Usla,
    ProxSub,
    GradSub,
    Myula,
}

impl Variant {
    pub const ALL: [Variant; 9] = [
        Variant::Masla,
        Variant::Mala,
        Variant::Rwm,
        Variant::Pmala,
        Variant::Ula,
        Variant::Usla,
        Variant::ProxSub,
        Variant::GradSub,
        Variant::Myula,
    ];

    pub fn id(&self) -> &'static str {
        match self {
            Variant::Masla => "MASLA",
            Variant::Mala => "MALA",
            Variant::Rwm => "RWM",
            Variant::Pmala => "PMALA",
            Variant::Ula => "ULA",
            Variant::Usla => "USLA",
            Variant::ProxSub => "ProxSub",
            Variant::GradSub => "GradSub",
            Variant::Myula => "MYULA",
        }
    }

    pub fn description(&self) -> &'static str {
        match self {
            Variant::Masla => "Metropolis-adjusted subdifferential Langevin",
            Variant::Mala => "Metropolis-adjusted Langevin (gradient drift)",
            Variant::Rwm => "random-walk Metropolis",
            Variant::Pmala => "proximal MALA (proposal centred at prox of U)",
            Variant::Ula => "unadjusted Langevin",
            Variant::Usla => "unadjusted subdifferential Langevin",
            Variant::ProxSub => "prox step on F, subgradient step on G o K",
            Variant::GradSub => "gradient step on F, subgradient step on G o K",
            Variant::Myula => "Moreau-Yosida unadjusted Langevin",
        }
    }

    /// Whether a Metropolis-Hastings accept/reject step follows the proposal.
    pub fn is_adjusted(&self) -> bool {
        matches!(self, Variant::Masla | Variant::Mala | Variant::Rwm | Variant::Pmala)
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.id())
    }
}

impl FromStr for Variant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL.into_iter().find(|v| v.id() == s).ok_or_else(|| Error::UnknownId {
            kind: "kernel",
            id: s.to_string(),
            valid: Self::ALL.map(|v| v.id()).join(", "),
        })
    }
}

pub const DEFAULT_THETA: f64 = 0.01;
pub const DEFAULT_RWM_SCALE: f64 = 1.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KernelConfig {
    pub variant: Variant,
    /// `gamma` for the Langevin kernels, `tau` for the composite ones.
    pub step: f64,
    /// Moreau-Yosida parameter (MYULA only).
    pub theta: f64,
    pub selection: SelectionRule,
    /// Proposal standard deviation (RWM only).
    pub rwm_scale: f64,
}

impl KernelConfig {
    pub fn new(variant: Variant, step: f64) -> Self {
        Self { variant, step, theta: DEFAULT_THETA, selection: SelectionRule::default(), rwm_scale: DEFAULT_RWM_SCALE }
    }

    pub fn with_theta(mut self, theta: f64) -> Self {
        self.theta = theta;
        self
    }

    pub fn with_selection(mut self, selection: SelectionRule) -> Self {
        self.selection = selection;
        self
    }

    pub fn with_rwm_scale(mut self, scale: f64) -> Self {
        self.rwm_scale = scale;
        self
    }
}

/// Position of a chain plus quantities cached at that position.
#[derive(Debug, Clone, PartialEq)]
pub struct ChainState {
    pub position: Vec<f64>,
    pub cached_potential: f64,
    /// `(position - mean(position)) / step`; the selected field element for
    /// the Langevin variants and zero for RWM.
    pub cached_drift: Vec<f64>,
    pub iteration: u64,
    pub accepts: u64,
    mean: Vec<f64>,
}

impl ChainState {
    /// The noiseless image of the position under the kernel's map.
    pub fn mean(&self) -> &[f64] {
        &self.mean
    }
}

/// A validated kernel bound to its target.
#[derive(Debug, Clone)]
pub struct Kernel {
    config: KernelConfig,
    target: TargetDistribution,
    noise_scale: f64,
}

/// Where selection randomness comes from, if anywhere.
enum Selector<'a> {
    Draws(&'a mut dyn Draws),
    /// Deterministic evaluation: a random selection at a kink is an error.
    Fixed,
}

impl Selector<'_> {
    fn select(&mut self, set: &FieldValue, rule: SelectionRule, x: &[f64]) -> Result<Vec<f64>> {
        match self {
            Selector::Draws(d) => Ok(set.select(rule, *d)),
            Selector::Fixed if rule == SelectionRule::UniformRandom && !set.is_singleton() => {
                Err(Error::RandomSelection(x.to_vec()))
            }
            Selector::Fixed => Ok(set.select(rule, &mut NoDraws)),
        }
    }
}

struct NoDraws;

impl Draws for NoDraws {
    fn standard_normal(&mut self) -> f64 {
        unreachable!("deterministic selection drew a normal")
    }

    fn uniform(&mut self) -> f64 {
        unreachable!("deterministic selection drew a uniform")
    }
}

impl Kernel {
    pub fn new(config: KernelConfig, target: TargetDistribution) -> Result<Self> {
        let KernelConfig { variant, step, theta, rwm_scale, .. } = config;
        if !(step > 0.0 && step.is_finite()) {
            return Err(Error::Config(format!("step must be positive and finite, got {step}")));
        }
        let needs_composite = matches!(variant, Variant::ProxSub | Variant::GradSub | Variant::Myula);
        if needs_composite && target.composite().is_none() {
            return Err(Error::Unsupported(format!("{variant} needs a composite target, '{}' is not", target.id())));
        }
        match variant {
            Variant::Pmala if !target.supports_prox(ProxPart::Full) => {
                return Err(Error::Unsupported(format!("PMALA needs the full prox, which '{}' lacks", target.id())));
            }
            Variant::Myula => {
                if !(theta > 0.0 && theta.is_finite()) {
                    return Err(Error::Config(format!("theta must be positive, got {theta}")));
                }
                let lip = target.composite().expect("checked above").grad_lipschitz();
                let bound = theta / (theta * lip + 1.0);
                if step > bound {
                    return Err(Error::Config(format!(
                        "MYULA step {step} exceeds theta / (theta L + 1) = {bound} for theta = {theta}, L = {lip}"
                    )));
                }
            }
            Variant::Rwm if !(rwm_scale > 0.0 && rwm_scale.is_finite()) => {
                return Err(Error::Config(format!("rwm_scale must be positive, got {rwm_scale}")));
            }
            _ => {}
        }
        let noise_scale = if variant == Variant::Rwm { rwm_scale } else { (2.0 * step).sqrt() };
        Ok(Self { config, target, noise_scale })
    }

    pub fn config(&self) -> &KernelConfig {
        &self.config
    }

    pub fn target(&self) -> &TargetDistribution {
        &self.target
    }

    /// Standard deviation of each proposal coordinate.
    pub fn noise_scale(&self) -> f64 {
        self.noise_scale
    }

    /// `(drift, mean)` at `x`.
    fn drift_and_mean(&self, x: &[f64], selector: &mut Selector<'_>) -> Result<(Vec<f64>, Vec<f64>)> {
        let KernelConfig { variant, step, theta, selection, .. } = self.config;
        if x.iter().any(|v| !v.is_finite()) {
            // A diverged chain stays diverged.
            return Ok((vec![f64::NAN; x.len()], vec![f64::NAN; x.len()]));
        }
        let potential = self.target.potential();
        let from_mean = |mean: Vec<f64>| -> (Vec<f64>, Vec<f64>) {
            let drift = x.iter().zip(&mean).map(|(a, m)| (a - m) / step).collect();
            (drift, mean)
        };
        let from_drift = |drift: Vec<f64>| -> (Vec<f64>, Vec<f64>) {
            let mean = x.iter().zip(&drift).map(|(a, b)| a - step * b).collect();
            (drift, mean)
        };
        Ok(match variant {
            Variant::Masla | Variant::Usla => from_drift(selector.select(&potential.field(x), selection, x)?),
            Variant::Mala | Variant::Ula => match potential.field(x).as_singleton() {
                Some(g) => from_drift(g),
                None => return Err(Error::NotDifferentiable(x.to_vec())),
            },
            Variant::Rwm => (vec![0.0; x.len()], x.to_vec()),
            Variant::Pmala => from_mean(potential.prox(ProxPart::Full, x, step)?),
            Variant::ProxSub | Variant::GradSub => {
                let c = self.target.composite().expect("validated at construction");
                let y = selector.select(&subdiff_g(c.apply_k(x), c.lambda)?, selection, x)?[0];
                let half: Vec<f64> = x.iter().zip(c.apply_kt(y)).map(|(a, b)| a - step * b).collect();
                if variant == Variant::ProxSub {
                    from_mean(c.prox_smooth(&half, step))
                } else {
                    let grad = c.f_grad(x);
                    from_mean(half.iter().zip(&grad).map(|(h, g)| h - step * g).collect())
                }
            }
            Variant::Myula => {
                let c = self.target.composite().expect("validated at construction");
                let p = c.prox_g_comp_k(x, theta);
                let grad = c.f_grad(x);
                let r = step / theta;
                from_mean(x.iter().zip(&grad).zip(&p).map(|((a, g), pk)| (1.0 - r) * a - step * g + r * pk).collect())
            }
        })
    }

    fn state_at(&self, x: Vec<f64>, selector: &mut Selector<'_>) -> Result<ChainState> {
        let (drift, mean) = self.drift_and_mean(&x, selector)?;
        Ok(ChainState {
            cached_potential: self.target.potential().value(&x),
            position: x,
            cached_drift: drift,
            iteration: 0,
            accepts: 0,
            mean,
        })
    }

    /// State at `x0`; selection draws at a kink come from `draws`.
    pub fn init_state<D: Draws>(&self, x0: &[f64], draws: &mut D) -> Result<ChainState> {
        check_dim(self.target.dim(), x0)?;
        check_finite(x0)?;
        self.state_at(x0.to_vec(), &mut Selector::Draws(draws))
    }

    /// State at `x0` for rules that never draw.
    pub fn init_state_deterministic(&self, x0: &[f64]) -> Result<ChainState> {
        check_dim(self.target.dim(), x0)?;
        check_finite(x0)?;
        self.state_at(x0.to_vec(), &mut Selector::Fixed)
    }

    /// `mean(state) + scale * noise`.
    pub fn propose(&self, state: &ChainState, noise: &[f64]) -> Result<Vec<f64>> {
        check_dim(self.target.dim(), noise)?;
        Ok(state.mean.iter().zip(noise).map(|(m, z)| m + self.noise_scale * z).collect())
    }

    fn log_gaussian(&self, mean: &[f64], to: &[f64]) -> f64 {
        let var = self.noise_scale * self.noise_scale;
        let d = to.len() as f64;
        let sq: f64 = to.iter().zip(mean).map(|(a, b)| (a - b) * (a - b)).sum();
        -0.5 * d * (2.0 * std::f64::consts::PI * var).ln() - sq / (2.0 * var)
    }

    fn require_adjusted(&self) -> Result<()> {
        if self.config.variant.is_adjusted() {
            Ok(())
        } else {
            Err(Error::Unsupported(format!("{} has no proposal density or acceptance step", self.config.variant)))
        }
    }

    fn checked_mean(&self, x: &[f64]) -> Result<Vec<f64>> {
        check_dim(self.target.dim(), x)?;
        check_finite(x)?;
        Ok(self.drift_and_mean(x, &mut Selector::Fixed)?.1)
    }

    /// `log q(from, to)`: Gaussian with mean `mean(from)` and variance
    /// `scale^2` per coordinate.
    pub fn log_proposal_density(&self, from: &[f64], to: &[f64]) -> Result<f64> {
        self.require_adjusted()?;
        let mean = self.checked_mean(from)?;
        check_dim(self.target.dim(), to)?;
        check_finite(to)?;
        Ok(self.log_gaussian(&mean, to))
    }

    /// `min(0, U(x) - U(y) + log q(y, x) - log q(x, y))`.
    pub fn log_acceptance(&self, x: &[f64], y: &[f64]) -> Result<f64> {
        self.require_adjusted()?;
        let (mx, my) = (self.checked_mean(x)?, self.checked_mean(y)?);
        let p = self.target.potential();
        Ok(self.log_alpha(p.value(x), &mx, x, p.value(y), &my, y))
    }

    fn log_alpha(&self, ux: f64, mx: &[f64], x: &[f64], uy: f64, my: &[f64], y: &[f64]) -> f64 {
        let r = ux - uy + self.log_gaussian(my, x) - self.log_gaussian(mx, y);
        if r.is_nan() {
            f64::NEG_INFINITY
        } else {
            r.min(0.0)
        }
    }

    /// Advances `state` by one transition and reports whether the move was
    /// accepted (always true for unadjusted variants).
    pub fn step<D: Draws>(&self, state: &mut ChainState, draws: &mut D) -> Result<bool> {
        let noise: Vec<f64> = (0..self.target.dim()).map(|_| draws.standard_normal()).collect();
        let y = self.propose(state, &noise)?;
        state.iteration += 1;
        if !self.config.variant.is_adjusted() {
            let next = self.state_at(y, &mut Selector::Draws(draws))?;
            state.position = next.position;
            state.cached_potential = next.cached_potential;
            state.cached_drift = next.cached_drift;
            state.mean = next.mean;
            state.accepts += 1;
            return Ok(true);
        }
        let u = draws.uniform();
        let proposal = self.state_at(y, &mut Selector::Draws(draws))?;
        let log_alpha = self.log_alpha(
            state.cached_potential,
            &state.mean,
            &state.position,
            proposal.cached_potential,
            &proposal.mean,
            &proposal.position,
        );
        if u.ln() <= log_alpha {
            state.position = proposal.position;
            state.cached_potential = proposal.cached_potential;
            state.cached_drift = proposal.cached_drift;
            state.mean = proposal.mean;
            state.accepts += 1;
            Ok(true)
        } else {
            Ok(false)
        }
    }
}
