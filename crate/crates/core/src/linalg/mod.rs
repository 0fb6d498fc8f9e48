//! Matrix-free linear algebra over abstract operators.
//!
//! Everything here talks to matrices only through [`LinearOperator::apply`],
//! so the same routines serve sparse graph Laplacians, composed precision
//! operators and dense test matrices.

mod cg;
mod dense;
mod finite_diff;
mod hutchinson;
mod lanczos;

pub use cg::{conjugate_gradients, CgConfig, CgSolution};
pub use dense::{dense_log_det, dense_smallest_eigenpairs, to_dense, DenseOperator};
pub use finite_diff::finite_diff_gradient;
pub use hutchinson::{hutchinson_probe, mix_seed, stochastic_log_det, SlqConfig};
pub use lanczos::{lanczos_smallest, LanczosConfig};

use nalgebra::{DMatrix, DVector};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LinalgError {
    #[error("conjugate gradients did not reach relative residual {tol:e} within {iterations} iterations (residual {residual:e})")]
    MaxItersExceeded {
        iterations: usize,
        residual: f64,
        tol: f64,
        best: Vec<f64>,
    },
    #[error("conjugate gradients breakdown: p'Ap = {curvature:e} at iteration {iteration} (operator not positive definite)")]
    BreakdownDetected { iteration: usize, curvature: f64 },
    #[error("Lanczos did not converge: {converged} of {requested} eigenpairs within a subspace of size {subspace}")]
    ConvergenceFailure {
        requested: usize,
        converged: usize,
        subspace: usize,
    },
    #[error("matrix is not positive definite")]
    NotPositiveDefinite,
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("requested {requested} eigenpairs from an operator of dimension {dim}")]
    TooManyEigenpairs { requested: usize, dim: usize },
}

/// A square real linear map known only through its action on vectors.
pub trait LinearOperator: Sync {
    fn dim(&self) -> usize;

    /// Writes `M v` into `out`. Both slices have length `dim()`.
    fn apply(&self, v: &[f64], out: &mut [f64]);

    /// Whether the operator is self-adjoint in the Euclidean inner product.
    fn is_symmetric(&self) -> bool {
        true
    }

    fn apply_vec(&self, v: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.dim()];
        self.apply(v, &mut out);
        out
    }
}

impl<T: LinearOperator + ?Sized> LinearOperator for &T {
    fn dim(&self) -> usize {
        (**self).dim()
    }
    fn apply(&self, v: &[f64], out: &mut [f64]) {
        (**self).apply(v, out)
    }
    fn is_symmetric(&self) -> bool {
        (**self).is_symmetric()
    }
}

/// Eigenpairs of a symmetric operator in the Euclidean geometry, ascending.
#[derive(Debug, Clone)]
pub struct SymmetricEigen {
    pub values: Vec<f64>,
    /// Orthonormal eigenvectors as columns, `dim x values.len()`.
    pub vectors: DMatrix<f64>,
}

/// Truncated Laplacian eigenpairs `(lambda_l, f_l)` with `f_l' D f_m = delta_lm`.
#[derive(Debug, Clone)]
pub struct EigenBasis {
    pub eigenvalues: Vec<f64>,
    /// `N x L`, column `l` holds `f_l` at the graph nodes.
    pub eigenvectors: DMatrix<f64>,
    /// Degree weights `D` defining the orthonormality.
    pub inner_weights: Vec<f64>,
}

impl EigenBasis {
    /// Turns eigenpairs of `D^{-1/2} (.) D^{1/2}`-similar symmetric operator into
    /// the random-walk basis `f_l = D^{-1/2} u_l`.
    pub fn from_symmetric(eig: SymmetricEigen, degrees: &[f64]) -> Self {
        let n = degrees.len();
        assert_eq!(eig.vectors.nrows(), n);
        let mut vectors = eig.vectors;
        for (i, d) in degrees.iter().enumerate() {
            let s = 1.0 / d.sqrt();
            for l in 0..vectors.ncols() {
                vectors[(i, l)] *= s;
            }
        }
        Self {
            eigenvalues: eig.values,
            eigenvectors: vectors,
            inner_weights: degrees.to_vec(),
        }
    }

    pub fn len(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn is_empty(&self) -> bool {
        self.eigenvalues.is_empty()
    }

    pub fn num_nodes(&self) -> usize {
        self.eigenvectors.nrows()
    }

    pub fn value(&self, node: usize, l: usize) -> f64 {
        self.eigenvectors[(node, l)]
    }

    /// Keeps the first `count` eigenpairs.
    pub fn truncate(&mut self, count: usize) {
        let count = count.min(self.len());
        self.eigenvalues.truncate(count);
        self.eigenvectors = self.eigenvectors.columns(0, count).into_owned();
    }

    /// Largest deviation of `F' D F` from the identity.
    pub fn orthonormality_residual(&self) -> f64 {
        let d = DVector::from_column_slice(&self.inner_weights);
        let weighted = DMatrix::from_fn(self.num_nodes(), self.len(), |i, l| {
            d[i] * self.eigenvectors[(i, l)]
        });
        let gram = self.eigenvectors.transpose() * weighted;
        let mut worst = 0.0f64;
        for l in 0..self.len() {
            for m in 0..self.len() {
                let target = if l == m { 1.0 } else { 0.0 };
                worst = worst.max((gram[(l, m)] - target).abs());
            }
        }
        worst
    }
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(crate) fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

pub(crate) fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}
