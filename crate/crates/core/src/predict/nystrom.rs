use crate::graph::{Extension, SparseGraph};
use crate::linalg::EigenBasis;

use super::PredictError;

/// Largest amplification `(1 − λ_l)⁻¹` accepted in the extension; components
/// with `λ_l ≥ 1 − 1/MAX_EXTENSION_GAIN` are dropped. Near `λ = 1` the
/// extension blows up away from the nodes (and is undefined at `λ = 1`).
pub const MAX_EXTENSION_GAIN: f64 = 10.0;

/// Out-of-sample evaluation of graph eigenvectors,
/// `f_l(x) = (1 − λ_l)⁻¹ Σ_j A(x, x_j)/D(x) f_l(x_j)`.
#[derive(Debug, Clone)]
pub struct NystromExtension {
    graph: SparseGraph,
    basis: EigenBasis,
    dropped: Vec<usize>,
}

impl NystromExtension {
    /// Keeps only the extendable components of `basis`; the indices of the
    /// dropped ones are available from [`Self::dropped`].
    pub fn new(graph: SparseGraph, basis: EigenBasis) -> Result<Self, PredictError> {
        if basis.num_nodes() != graph.len() {
            return Err(PredictError::LengthMismatch(format!(
                "basis over {} nodes, graph has {}",
                basis.num_nodes(),
                graph.len()
            )));
        }
        let keep: Vec<usize> = (0..basis.len())
            .filter(|&l| basis.eigenvalues[l] < 1.0 - 1.0 / MAX_EXTENSION_GAIN)
            .collect();
        let dropped: Vec<usize> = (0..basis.len()).filter(|l| !keep.contains(l)).collect();
        let basis = if dropped.is_empty() {
            basis
        } else {
            log::warn!("dropping {} eigenpairs with eigenvalue near 1 from the extension", dropped.len());
            EigenBasis {
                eigenvalues: keep.iter().map(|&l| basis.eigenvalues[l]).collect(),
                eigenvectors: basis.eigenvectors.select_columns(&keep),
                inner_weights: basis.inner_weights,
            }
        };
        Ok(Self { graph, basis, dropped })
    }

    pub fn into_parts(self) -> (SparseGraph, EigenBasis) {
        (self.graph, self.basis)
    }

    pub fn graph(&self) -> &SparseGraph {
        &self.graph
    }

    /// The retained basis; feature vectors are aligned with its columns.
    pub fn basis(&self) -> &EigenBasis {
        &self.basis
    }

    /// Indices (into the original basis) of the components left out.
    pub fn dropped(&self) -> &[usize] {
        &self.dropped
    }

    pub fn features(&self, x: &[f64]) -> Result<Vec<f64>, PredictError> {
        let ext = self.graph.extend_weights(x)?;
        Ok(self.features_from(&ext))
    }

    pub fn features_from(&self, ext: &Extension) -> Vec<f64> {
        let f = &self.basis.eigenvectors;
        (0..self.basis.len())
            .map(|l| {
                let avg: f64 = ext
                    .neighbors
                    .iter()
                    .zip(&ext.weights)
                    .map(|(&j, w)| w * f[(j, l)])
                    .sum::<f64>()
                    / ext.degree;
                avg / (1.0 - self.basis.eigenvalues[l])
            })
            .collect()
    }
}

/// One-shot feature evaluation; prefer [`NystromExtension`] for many points.
pub fn nystrom_features(graph: &SparseGraph, basis: &EigenBasis, x: &[f64]) -> Result<Vec<f64>, PredictError> {
    NystromExtension::new(graph.clone(), basis.clone())?.features(x)
}
