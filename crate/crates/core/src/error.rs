use thiserror::Error;

/// Errors raised by targets, kernels, ensembles and metrics.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("argument error: {0}")]
    Argument(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("configuration error: {0}")]
    Config(String),

    #[error("unsupported: {0}")]
    Unsupported(String),

    /// The proximal problem has more than one minimizer.
    #[error("proximal point is not unique at v = {v:?} (minimizers include {minimizers:?})")]
    NotUnique { v: Vec<f64>, minimizers: Vec<Vec<f64>> },

    /// A gradient-based kernel was evaluated where the field is set-valued.
    #[error("potential is not differentiable at {0:?}")]
    NotDifferentiable(Vec<f64>),

    /// The requested quantity depends on a random selection from a set-valued field.
    #[error("uniform_random selection at the non-singleton point {0:?} has no deterministic value")]
    RandomSelection(Vec<f64>),

    #[error("unknown {kind} id '{id}'; valid ids: {valid}")]
    UnknownId { kind: &'static str, id: String, valid: String },

    #[error("transport problem has {got} points but the exact solver is capped at {cap}; subsample the inputs")]
    TooManyPoints { got: usize, cap: usize },

    #[error("transport problem is infeasible")]
    Infeasible,
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn check_finite(x: &[f64]) -> Result<()> {
    if x.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(Error::Argument(format!("non-finite input {x:?}")))
    }
}

pub(crate) fn check_dim(expected: usize, x: &[f64]) -> Result<()> {
    if x.len() == expected {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { expected, got: x.len() })
    }
}
