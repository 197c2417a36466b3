use crate::error::{Error, Result};
use crate::field::FieldValue;

/// `U(x) = F(x) + G(Kx)` with a quadratic data term
/// `F(x) = |x - y|^2 / (2 sigma^2)`, `G(p) = lambda |p|` and a single-row
/// linear map `K`.
#[derive(Debug, Clone, PartialEq)]
pub struct CompositeStructure {
    pub y_data: Vec<f64>,
    pub sigma: f64,
    pub lambda: f64,
    /// The row of `K`; `Kx = <k_row, x>`.
    pub k_row: Vec<f64>,
}

impl CompositeStructure {
    pub fn new(y_data: Vec<f64>, sigma: f64, lambda: f64, k_row: Vec<f64>) -> Result<Self> {
        if !(sigma > 0.0 && sigma.is_finite()) {
            return Err(Error::Argument(format!("sigma must be positive, got {sigma}")));
        }
        if !(lambda > 0.0 && lambda.is_finite()) {
            return Err(Error::Argument(format!("lambda must be positive, got {lambda}")));
        }
        if y_data.len() != k_row.len() || y_data.is_empty() {
            return Err(Error::Argument("y_data and K must share a positive dimension".into()));
        }
        if y_data.iter().chain(&k_row).any(|v| !v.is_finite()) {
            return Err(Error::Argument("y_data and K must be finite".into()));
        }
        if k_row.iter().all(|&k| k == 0.0) {
            return Err(Error::Argument("K must be nonzero".into()));
        }
        Ok(Self { y_data, sigma, lambda, k_row })
    }

    /// Two-dimensional total variation: `Kx = x2 - x1`.
    pub fn tv_l2(y_data: Vec<f64>, sigma: f64, lambda: f64) -> Result<Self> {
        if y_data.len() != 2 {
            return Err(Error::DimensionMismatch { expected: 2, got: y_data.len() });
        }
        Self::new(y_data, sigma, lambda, vec![-1.0, 1.0])
    }

    pub fn dim(&self) -> usize {
        self.y_data.len()
    }

    pub fn f_value(&self, x: &[f64]) -> f64 {
        let s2 = self.sigma * self.sigma;
        x.iter().zip(&self.y_data).map(|(a, b)| (a - b) * (a - b)).sum::<f64>() / (2.0 * s2)
    }

    pub fn f_grad(&self, x: &[f64]) -> Vec<f64> {
        let s2 = self.sigma * self.sigma;
        x.iter().zip(&self.y_data).map(|(a, b)| (a - b) / s2).collect()
    }

    /// Lipschitz constant of `grad F`, i.e. `sigma^-2`.
    pub fn grad_lipschitz(&self) -> f64 {
        1.0 / (self.sigma * self.sigma)
    }

    /// `|K|^2`, the squared operator norm of the single-row map.
    pub fn k_norm_sq(&self) -> f64 {
        self.k_row.iter().map(|k| k * k).sum()
    }

    pub fn apply_k(&self, x: &[f64]) -> f64 {
        self.k_row.iter().zip(x).map(|(k, v)| k * v).sum()
    }

    pub fn apply_kt(&self, p: f64) -> Vec<f64> {
        self.k_row.iter().map(|k| k * p).collect()
    }

    pub fn g_value(&self, p: f64) -> f64 {
        self.lambda * p.abs()
    }

    pub fn value(&self, x: &[f64]) -> f64 {
        self.f_value(x) + self.g_value(self.apply_k(x))
    }

    /// `grad F(x) + K^T dG(Kx)`; a segment where `Kx = 0`.
    pub fn field(&self, x: &[f64]) -> FieldValue {
        let grad = self.f_grad(x);
        let p = self.apply_k(x);
        let shifted = |s: f64| -> Vec<f64> { grad.iter().zip(&self.k_row).map(|(g, k)| g + s * k).collect() };
        if p == 0.0 {
            FieldValue::Hull(vec![shifted(-self.lambda), shifted(self.lambda)])
        } else {
            FieldValue::Singleton(shifted(self.lambda * p.signum()))
        }
    }

    /// `argmin_x F(x) + |x - v|^2 / (2 step)`.
    pub fn prox_smooth(&self, v: &[f64], step: f64) -> Vec<f64> {
        let a = 1.0 / (self.sigma * self.sigma);
        let b = 1.0 / step;
        v.iter().zip(&self.y_data).map(|(vi, yi)| (a * yi + b * vi) / (a + b)).collect()
    }

    /// `argmin_x G(Kx) + |x - v|^2 / (2 theta)`.
    ///
    /// Only the component of `x - v` along `k` moves: with `t = Kx` the problem
    /// reduces to `lambda |t| + (t - Kv)^2 / (2 theta |k|^2)`, whose solution is
    /// a soft threshold at `lambda theta |k|^2`.
    pub fn prox_g_comp_k(&self, v: &[f64], theta: f64) -> Vec<f64> {
        let kk = self.k_norm_sq();
        let kv = self.apply_k(v);
        let shift = (soft_threshold(kv, self.lambda * theta * kk) - kv) / kk;
        v.iter().zip(&self.k_row).map(|(vi, ki)| vi + shift * ki).collect()
    }

    /// `argmin_x F(x) + G(Kx) + |x - v|^2 / (2 step)`.
    ///
    /// The two quadratics merge into one centred at `w` with step
    /// `1 / (sigma^-2 + step^-1)`, after which the `G o K` prox applies.
    pub fn prox_full(&self, v: &[f64], step: f64) -> Vec<f64> {
        let a = 1.0 / (self.sigma * self.sigma);
        let b = 1.0 / step;
        let w: Vec<f64> = v.iter().zip(&self.y_data).map(|(vi, yi)| (a * yi + b * vi) / (a + b)).collect();
        self.prox_g_comp_k(&w, 1.0 / (a + b))
    }
}

/// `sign(s) max(|s| - c, 0)`.
pub fn soft_threshold(s: f64, c: f64) -> f64 {
    if s > c {
        s - c
    } else if s < -c {
        s + c
    } else {
        0.0
    }
}

/// Subdifferential of `G(p) = lambda |p|`.
pub fn subdiff_g(p: f64, lambda: f64) -> Result<FieldValue> {
    if !(lambda > 0.0 && lambda.is_finite()) {
        return Err(Error::Argument(format!("lambda must be positive, got {lambda}")));
    }
    if p.is_nan() {
        return Err(Error::Argument("p must not be NaN".into()));
    }
    Ok(if p == 0.0 {
        FieldValue::Interval { lo: -lambda, hi: lambda }
    } else {
        FieldValue::Singleton(vec![p.signum() * lambda])
    })
}
