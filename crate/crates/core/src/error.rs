use thiserror::Error;

use crate::optim::RunTrace;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("index {index} at mode {mode} is outside [1, {dim}]")]
    IndexOutOfRange {
        mode: usize,
        index: usize,
        dim: usize,
    },

    #[error("multi-index has {got} entries, tensor order is {order}")]
    IndexArity { got: usize, order: usize },

    #[error("tensor of order {order} and dimension {dim} needs {requested} elements, budget is {budget}")]
    BudgetExceeded {
        order: usize,
        dim: usize,
        requested: u128,
        budget: usize,
    },

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("invalid tensor order {order}: {reason}")]
    InvalidOrder { order: usize, reason: &'static str },

    #[error("non-finite value at position {position}")]
    NonFinite { position: usize },

    #[error("matrix is not symmetric (max asymmetry {asymmetry:e})")]
    NotSymmetric { asymmetry: f64 },

    #[error("vector norm {norm} is not within tolerance of 1")]
    NotUnit { norm: f64 },

    #[error("cannot normalize a zero vector")]
    ZeroVector,

    #[error("matrix has zero Frobenius norm")]
    ZeroMatrix,

    #[error("power iteration did not converge in {iterations} iterations (residual {residual:e})")]
    NoConvergence {
        iterations: usize,
        residual: f64,
        last_iterate: Vec<f64>,
    },

    #[error("numerical collapse at step {t}: Frobenius norm of W fell to {norm:e}")]
    NumericalCollapse {
        t: usize,
        norm: f64,
        trace: Box<RunTrace>,
    },

    #[error("divergence at step {t}: non-finite parameter entries (step size {eta:e} is likely too large)")]
    Divergence {
        t: usize,
        eta: f64,
        trace: Box<RunTrace>,
    },

    #[error("partial trace of the averaged tensor is the zero vector")]
    DegeneratePreprocess,

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("bad tensor file: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Short machine-readable tag, used by the CLI.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::IndexOutOfRange { .. } | Error::IndexArity { .. } => "index",
            Error::BudgetExceeded { .. } => "budget_exceeded",
            Error::ShapeMismatch(_) => "shape_mismatch",
            Error::InvalidOrder { .. } => "invalid_order",
            Error::NonFinite { .. } => "non_finite",
            Error::NotSymmetric { .. } => "not_symmetric",
            Error::NotUnit { .. } => "not_unit",
            Error::ZeroVector | Error::ZeroMatrix => "zero",
            Error::NoConvergence { .. } => "no_convergence",
            Error::NumericalCollapse { .. } => "numerical_collapse",
            Error::Divergence { .. } => "divergence",
            Error::DegeneratePreprocess => "degenerate_preprocess",
            Error::InvalidConfig(_) => "invalid_config",
            Error::Format(_) => "format",
            Error::Io(_) => "io",
            Error::Json(_) => "json",
        }
    }

    pub(crate) fn config(msg: impl Into<String>) -> Self {
        Error::InvalidConfig(msg.into())
    }
}
