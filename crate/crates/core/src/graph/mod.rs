//! Point clouds, exact KNN search and the density-normalized KNN graph.

mod cloud;
mod knn;
mod laplacian;
mod sparse;

pub use cloud::{PointCloud, PointSet};
pub use knn::{KnnIndex, Neighbor, NeighborSearch};
pub use laplacian::{EigenConfig, EigenSolver, LaplacianKind, LaplacianOp};
pub use sparse::{
    build_graph, CsrMatrix, Extension, GraphDerivative, GraphPattern, SparseGraph, Structure,
    DETACHED_THRESHOLD,
};

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GraphError {
    #[error("point cloud is empty")]
    EmptyCloud,
    #[error("K = {k} neighbors requested but the cloud has only {n} points (need K < N)")]
    KTooLarge { k: usize, n: usize },
    #[error("graph bandwidth must be positive and finite, got {0}")]
    NonPositiveBandwidth(f64),
    #[error("point is numerically detached from the graph (total weight {tilde_degree:e}); use the Euclidean model")]
    NumericallyDetached { tilde_degree: f64 },
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("invalid input: {0}")]
    InvalidInput(String),
}
