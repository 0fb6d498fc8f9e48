use nalgebra::DMatrix;

use crate::linalg::EigenBasis;

use super::HyperParams;

/// Graph Matérn spectral density `Φ(λ) = (2ν/κ² + λ)^{-ν}`.
pub fn phi(lambda: f64, nu: u32, kappa: f64) -> f64 {
    (2.0 * nu as f64 / (kappa * kappa) + lambda).powi(-(nu as i32))
}

/// Truncated graph Matérn kernel `(σ²/C) Σ_l Φ(λ_l) f_l f_lᵀ` on the nodes.
#[derive(Debug, Clone)]
pub struct SpectralKernel {
    pub basis: EigenBasis,
    pub params: HyperParams,
    /// Normalization constant `C`; 1 when normalization is disabled.
    pub norm_const: f64,
}

impl SpectralKernel {
    pub fn new(basis: EigenBasis, params: HyperParams, norm_const: f64) -> Self {
        Self { basis, params, norm_const }
    }

    /// Per-eigenpair weights `σ² Φ(λ_l) / C`.
    pub fn weights(&self) -> Vec<f64> {
        let s = self.params.sigma2 / self.norm_const;
        self.basis
            .eigenvalues
            .iter()
            .map(|&l| s * phi(l, self.params.nu, self.params.kappa))
            .collect()
    }

    pub fn eval_nodes(&self, i: usize, j: usize) -> f64 {
        let f = &self.basis.eigenvectors;
        self.weights()
            .iter()
            .enumerate()
            .map(|(l, w)| w * f[(i, l)] * f[(j, l)])
            .sum()
    }

    /// Kernel between two feature vectors (e.g. Nyström-extended points).
    pub fn eval_features(&self, a: &[f64], b: &[f64]) -> f64 {
        self.weights()
            .iter()
            .zip(a.iter().zip(b))
            .map(|(w, (x, y))| w * x * y)
            .sum()
    }

    pub fn gram(&self) -> DMatrix<f64> {
        let f = &self.basis.eigenvectors;
        let w = self.weights();
        let scaled = DMatrix::from_fn(f.nrows(), f.ncols(), |i, l| f[(i, l)] * w[l]);
        scaled * f.transpose()
    }
}
