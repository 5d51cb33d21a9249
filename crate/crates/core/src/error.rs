use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("non-finite evaluation of {what} at sample {sample:?}")]
    NonFiniteEvaluation { what: &'static str, sample: Vec<f64> },

    #[error("t = {t} is outside the domain of the {mode} solution")]
    OutOfDomain { mode: &'static str, t: f64 },

    #[error("branch-restricted minimizer reached the convexity boundary at t = {t}")]
    BranchExit { t: f64, u_prev: f64 },

    #[error("eigen iteration did not converge after {iterations} iterations (last change {last_change:e})")]
    EigenSolveFailure { iterations: usize, last_change: f64 },

    #[error("conjugate gradients stalled after {iterations} iterations (relative residual {residual:e})")]
    LinearSolveFailure { iterations: usize, residual: f64 },

    #[error("L^p norm with p = {0} is not supported (use 2, 4 or 6)")]
    UnsupportedExponent(f64),

    #[error("increment solve did not converge{} after {iterations} iterations (residual {residual:e})",
        step.map(|k| format!(" at step {k}")).unwrap_or_default())]
    NoConvergence { step: Option<usize>, iterations: usize, residual: f64 },

    #[error("increment functional is not convex: negative curvature {curvature:e} along the iteration")]
    NonConvexTotal { curvature: f64 },

    #[error("problem is not admissible: mu * C_P^2 = {product} >= kappa = {kappa} (margin {margin})")]
    Inadmissible { product: f64, kappa: f64, margin: f64 },

    #[error("rate fit needs at least 3 strictly decreasing levels, got {0}")]
    InsufficientLevels(usize),

    #[error("field belongs to a different finite element space")]
    SpaceMismatch,

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidInput(msg.into())
}
