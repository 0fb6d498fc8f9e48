//! Hyperparameter learning for the implicit graph Matérn prior.

mod adam;
pub mod checkpoint;
mod fit;
mod likelihood;
mod operator;
mod priors;
mod truncated;

pub use adam::Adam;
pub use checkpoint::Checkpoint;
pub use fit::{
    fit_map, map_gradient, map_objective, taylor_margin, FitProblem, FitResult, TraceEntry, TrainConfig, Trajectory,
};
pub use likelihood::{grad_log_likelihood, log_likelihood, LogDetMethod, TraceProbes};
pub use operator::{PrecisionMode, PrecisionOp, PrecisionOptions};
pub use priors::{
    bandwidth_prior_fit, bandwidth_prior_from_radii, neighborhood_radii, BandwidthPrior, PriorSpec, TruncatedNormal,
};
pub use truncated::{reoptimize_truncated, truncated_log_likelihood, TruncatedConfig, TruncatedFit};

use crate::graph::GraphError;
use crate::kernel::KernelError;
use crate::linalg::LinalgError;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum TrainError {
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Kernel(#[from] KernelError),
    #[error("bandwidth prior is degenerate: median radius {q2} does not exceed the floor {alpha_floor} (tau = {tau})")]
    DegeneratePrior { q2: f64, alpha_floor: f64, tau: f64 },
    #[error("every restart failed: {0:?}")]
    AllRestartsFailed(Vec<String>),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("no labeled points")]
    NoLabels,
    #[error("non-finite value: {0}")]
    NonFinite(String),
}
