//! Posterior inference at arbitrary ambient points.

mod euclid;
mod geometric;
mod hybrid;
mod nystrom;

pub use euclid::{EuclideanFitConfig, EuclideanGp, EuclideanModel};
pub use geometric::{kernel_eval_ambient, GeometricPosterior};
pub use hybrid::{bump_weight, HybridPredictor};
pub use nystrom::{nystrom_features, NystromExtension, MAX_EXTENSION_GAIN};

use crate::graph::GraphError;
use crate::kernel::KernelError;
use crate::linalg::LinalgError;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum PredictError {
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Kernel(#[from] KernelError),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error("length mismatch: {0}")]
    LengthMismatch(String),
    #[error("invalid input: {0}")]
    InvalidInput(String),
}

/// Posterior summary at one point, in standardized label units.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct Prediction {
    pub mean: f64,
    pub variance: f64,
    /// Weight of the geometric model in the blend.
    pub gamma: f64,
}
