use crate::linalg::{
    dense_smallest_eigenpairs, lanczos_smallest, to_dense, EigenBasis, LanczosConfig, LinalgError,
    LinearOperator,
};

use super::sparse::SparseGraph;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LaplacianKind {
    /// `D - A`
    Unnormalized,
    /// `I - D^{-1/2} A D^{-1/2}`
    Symmetric,
    /// `I - D^{-1} A`
    RandomWalk,
}

/// One of the three graph Laplacians as a matrix-free operator.
#[derive(Debug, Clone, Copy)]
pub struct LaplacianOp<'g> {
    graph: &'g SparseGraph,
    kind: LaplacianKind,
}

impl<'g> LaplacianOp<'g> {
    pub fn new(graph: &'g SparseGraph, kind: LaplacianKind) -> Self {
        Self { graph, kind }
    }

    pub fn kind(&self) -> LaplacianKind {
        self.kind
    }
}

impl SparseGraph {
    pub fn laplacian(&self, kind: LaplacianKind) -> LaplacianOp<'_> {
        LaplacianOp::new(self, kind)
    }
}

impl LinearOperator for LaplacianOp<'_> {
    fn dim(&self) -> usize {
        self.graph.len()
    }

    fn apply(&self, v: &[f64], out: &mut [f64]) {
        let d = self.graph.deg();
        match self.kind {
            LaplacianKind::Unnormalized => {
                self.graph.adj().matvec(v, out);
                for i in 0..v.len() {
                    out[i] = d[i] * v[i] - out[i];
                }
            }
            LaplacianKind::Symmetric => {
                let scaled: Vec<f64> = v.iter().zip(d).map(|(x, di)| x / di.sqrt()).collect();
                self.graph.adj().matvec(&scaled, out);
                for i in 0..v.len() {
                    out[i] = v[i] - out[i] / d[i].sqrt();
                }
            }
            LaplacianKind::RandomWalk => {
                self.graph.adj().matvec(v, out);
                for i in 0..v.len() {
                    out[i] = v[i] - out[i] / d[i];
                }
            }
        }
    }

    fn is_symmetric(&self) -> bool {
        self.kind != LaplacianKind::RandomWalk
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EigenSolver {
    /// Lanczos, with the dense path when the request covers most of the
    /// spectrum or Lanczos fails on a small graph.
    Auto,
    Lanczos,
    Dense,
}

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct EigenConfig {
    pub solver: EigenSolver,
    pub lanczos: LanczosConfig,
    /// Largest graph handled by the dense eigensolver.
    pub dense_limit: usize,
}

impl Default for EigenConfig {
    fn default() -> Self {
        Self {
            solver: EigenSolver::Auto,
            lanczos: LanczosConfig::default(),
            dense_limit: 2000,
        }
    }
}

impl SparseGraph {
    /// The `count` smallest eigenpairs of the random-walk Laplacian, computed
    /// on the similar symmetric Laplacian and mapped back with `D^{-1/2}`.
    pub fn eigenbasis(&self, count: usize, config: &EigenConfig) -> Result<EigenBasis, LinalgError> {
        let n = self.len();
        let op = self.laplacian(LaplacianKind::Symmetric);
        let dense = || {
            let m = to_dense(&op);
            dense_smallest_eigenpairs(&m, count)
        };
        let eig = match config.solver {
            EigenSolver::Dense => dense()?,
            EigenSolver::Lanczos => lanczos_smallest(&op, count, &config.lanczos)?,
            EigenSolver::Auto => {
                if n <= config.dense_limit && 2 * config.lanczos.oversample * count >= n {
                    dense()?
                } else {
                    match lanczos_smallest(&op, count, &config.lanczos) {
                        Ok(e) => e,
                        Err(err @ LinalgError::ConvergenceFailure { .. }) if n <= config.dense_limit => {
                            log::warn!("{err}; falling back to the dense eigensolver");
                            dense()?
                        }
                        Err(err) => return Err(err),
                    }
                }
            }
        };
        Ok(EigenBasis::from_symmetric(eig, self.deg()))
    }
}
