//! Gaussian process regression on implicit manifolds.
//!
//! A point cloud (partly labeled) defines a KNN graph whose random-walk
//! Laplacian stands in for the Laplace-Beltrami operator of the unknown
//! manifold. Graph Matérn kernels built from it are trained through their
//! sparse precision matrices and evaluated anywhere in the ambient space by
//! Nyström extension of the Laplacian eigenvectors.
//!
//! The modules follow the pipeline: [`graph`] (KNN graph, Laplacians,
//! eigenpairs), [`kernel`] (graph and Euclidean kernels, precision
//! operators), [`train`] (priors, likelihood, MAP fitting), [`predict`]
//! (posteriors and the hybrid blend) and [`experiment`] (data, runs, metrics).

pub mod experiment;
pub mod graph;
pub mod kernel;
pub mod linalg;
pub mod predict;
pub mod train;

pub use experiment::{run_experiment, ExperimentConfig, ExperimentError, MetricsReport};
pub use graph::{build_graph, KnnIndex, PointCloud, PointSet, SparseGraph};
pub use kernel::HyperParams;
pub use predict::{GeometricPosterior, HybridPredictor, Prediction};
pub use train::{fit_map, TrainConfig, TrainError};

/// Caps the rayon pool at `IMGP_THREADS` when that variable is set.
/// Call once, before any parallel work; later calls are no-ops.
pub fn configure_threads() {
    if let Some(n) = std::env::var("IMGP_THREADS").ok().and_then(|v| v.parse::<usize>().ok()) {
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n.max(1)).build_global();
    }
}
