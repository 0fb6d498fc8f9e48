//! Graph Matérn kernels, their sparse precision operators, and the Euclidean
//! Matérn baseline.

mod euclid;
mod normalization;
mod params;
mod precision;
mod rff;
mod spectral;

pub use euclid::{euclid_matern, EuclideanMatern, EuclideanSmoothness};
pub use normalization::{norm_const, NormConstConfig, NormConstEstimate};
pub use params::HyperParams;
pub use precision::{precision_matvec, GraphPrecision, PrecisionForms};
pub use rff::RandomFourierFeatures;
pub use spectral::{phi, SpectralKernel};


use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum KernelError {
    #[error("Euclidean Matérn smoothness {0} is not supported (use 0.5, 1.5, 2.5 or infinity)")]
    UnsupportedSmoothness(f64),
    #[error("invalid hyperparameters: {0}")]
    InvalidHyperParams(String),
}
