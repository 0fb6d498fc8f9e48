use std::sync::Arc;

use nalgebra::DMatrix;
use rayon::prelude::*;

use super::cloud::{sq_dist, PointSet};
use super::knn::{KnnIndex, NeighborSearch};
use super::GraphError;

/// Rows below this count are multiplied serially; rayon overhead dominates otherwise.
const PARALLEL_ROWS: usize = 4096;

/// Below this total weight an out-of-sample point is considered detached.
pub const DETACHED_THRESHOLD: f64 = 1e-300;

/// Compressed-row sparsity structure with sorted column indices.
#[derive(Debug, Clone, PartialEq)]
pub struct Structure {
    n: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
}

impl Structure {
    /// Builds a structure from per-row column lists (sorted and deduplicated here).
    pub fn from_rows(mut rows: Vec<Vec<usize>>) -> Self {
        let n = rows.len();
        let mut row_ptr = Vec::with_capacity(n + 1);
        let mut col_idx = Vec::new();
        row_ptr.push(0);
        for row in rows.iter_mut() {
            row.sort_unstable();
            row.dedup();
            assert!(row.iter().all(|&j| j < n), "column index out of range");
            col_idx.extend_from_slice(row);
            row_ptr.push(col_idx.len());
        }
        Self { n, row_ptr, col_idx }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn nnz(&self) -> usize {
        self.col_idx.len()
    }

    pub fn row(&self, i: usize) -> &[usize] {
        &self.col_idx[self.row_ptr[i]..self.row_ptr[i + 1]]
    }

    pub fn row_range(&self, i: usize) -> std::ops::Range<usize> {
        self.row_ptr[i]..self.row_ptr[i + 1]
    }

    /// Position of `(i, j)` in the value array, if stored.
    pub fn position(&self, i: usize, j: usize) -> Option<usize> {
        let start = self.row_ptr[i];
        self.row(i).binary_search(&j).ok().map(|p| start + p)
    }
}

/// Square sparse matrix in compressed-row storage. Several matrices built on
/// the same graph share one [`Structure`].
#[derive(Debug, Clone)]
pub struct CsrMatrix {
    structure: Arc<Structure>,
    values: Vec<f64>,
}

impl CsrMatrix {
    pub fn new(structure: Arc<Structure>, values: Vec<f64>) -> Self {
        assert_eq!(structure.nnz(), values.len(), "value count must match structure");
        Self { structure, values }
    }

    pub fn structure(&self) -> &Arc<Structure> {
        &self.structure
    }

    pub fn dim(&self) -> usize {
        self.structure.n
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn row(&self, i: usize) -> (&[usize], &[f64]) {
        let r = self.structure.row_range(i);
        (&self.structure.col_idx[r.clone()], &self.values[r])
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.structure.position(i, j).map_or(0.0, |p| self.values[p])
    }

    pub fn row_sums(&self) -> Vec<f64> {
        (0..self.dim()).map(|i| self.row(i).1.iter().sum()).collect()
    }

    /// `out = M v`. Each row is reduced serially, so the result does not depend
    /// on the thread count.
    pub fn matvec(&self, v: &[f64], out: &mut [f64]) {
        let row_dot = |i: usize| {
            let (cols, vals) = self.row(i);
            cols.iter().zip(vals).map(|(&j, &a)| a * v[j]).sum::<f64>()
        };
        if self.dim() >= PARALLEL_ROWS {
            out.par_iter_mut().enumerate().for_each(|(i, o)| *o = row_dot(i));
        } else {
            for (i, o) in out.iter_mut().enumerate() {
                *o = row_dot(i);
            }
        }
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let n = self.dim();
        let mut m = DMatrix::zeros(n, n);
        for i in 0..n {
            let (cols, vals) = self.row(i);
            for (&j, &a) in cols.iter().zip(vals) {
                m[(i, j)] = a;
            }
        }
        m
    }

    pub fn max_asymmetry(&self) -> f64 {
        let mut worst = 0.0f64;
        for i in 0..self.dim() {
            let (cols, vals) = self.row(i);
            for (&j, &a) in cols.iter().zip(vals) {
                worst = worst.max((a - self.get(j, i)).abs());
            }
        }
        worst
    }
}

/// The bandwidth-independent part of the graph: the symmetrized KNN pattern
/// (with self-loops) and the squared distance for every stored edge.
///
/// Rebuilding the weights for a new bandwidth is O(nnz), which is what the
/// optimizer needs on every step.
pub struct GraphPattern {
    search: Arc<dyn NeighborSearch>,
    k: usize,
    structure: Arc<Structure>,
    sq_dists: Vec<f64>,
}

impl std::fmt::Debug for GraphPattern {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("GraphPattern")
            .field("n", &self.structure.n)
            .field("k", &self.k)
            .field("nnz", &self.structure.nnz())
            .finish()
    }
}

impl GraphPattern {
    /// Symmetrized KNN: `j` is adjacent to `i` when either is among the other's
    /// `K` nearest neighbors.
    pub fn from_index(index: &KnnIndex) -> Self {
        let lists: Vec<Vec<usize>> = index
            .all_node_neighbors()
            .into_iter()
            .map(|nb| nb.into_iter().map(|n| n.index).collect())
            .collect();
        Self::from_neighbor_lists(Arc::new(index.clone()), index.k(), lists)
    }

    /// Builds the pattern from explicit directed neighbor lists; the lists are
    /// symmetrized and self-loops added.
    pub fn from_neighbor_lists(search: Arc<dyn NeighborSearch>, k: usize, lists: Vec<Vec<usize>>) -> Self {
        let points = search.points().clone();
        let n = points.len();
        assert_eq!(lists.len(), n, "one neighbor list per node");
        let mut rows: Vec<Vec<usize>> = (0..n).map(|i| vec![i]).collect();
        for (i, list) in lists.iter().enumerate() {
            for &j in list {
                rows[i].push(j);
                rows[j].push(i);
            }
        }
        let structure = Structure::from_rows(rows);
        let mut sq_dists = vec![0.0; structure.nnz()];
        for i in 0..n {
            for p in structure.row_range(i) {
                let j = structure.col_idx[p];
                sq_dists[p] = sq_dist(points.row(i), points.row(j));
            }
        }
        Self {
            search,
            k,
            structure: Arc::new(structure),
            sq_dists,
        }
    }

    pub fn points(&self) -> &Arc<PointSet> {
        self.search.points()
    }

    pub fn search(&self) -> &Arc<dyn NeighborSearch> {
        &self.search
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn len(&self) -> usize {
        self.structure.n
    }

    pub fn is_empty(&self) -> bool {
        self.structure.n == 0
    }

    pub fn structure(&self) -> &Arc<Structure> {
        &self.structure
    }

    pub fn sq_dists(&self) -> &[f64] {
        &self.sq_dists
    }

    /// Weighted, density-normalized graph at bandwidth `alpha`.
    pub fn with_bandwidth(self: &Arc<Self>, alpha: f64) -> Result<SparseGraph, GraphError> {
        if !(alpha > 0.0) || !alpha.is_finite() {
            return Err(GraphError::NonPositiveBandwidth(alpha));
        }
        let n = self.len();
        let scale = 1.0 / (4.0 * alpha * alpha);
        let tilde: Vec<f64> = self.sq_dists.iter().map(|d2| (-d2 * scale).exp()).collect();
        let tilde_adj = CsrMatrix::new(self.structure.clone(), tilde);
        let tilde_deg = tilde_adj.row_sums();
        let mut adj_vals = vec![0.0; self.structure.nnz()];
        for i in 0..n {
            for p in self.structure.row_range(i) {
                let j = self.structure.col_idx[p];
                adj_vals[p] = tilde_adj.values[p] / (tilde_deg[i] * tilde_deg[j]);
            }
        }
        let adj = CsrMatrix::new(self.structure.clone(), adj_vals);
        let deg = adj.row_sums();
        Ok(SparseGraph {
            pattern: self.clone(),
            alpha,
            tilde_adj,
            tilde_deg,
            adj,
            deg,
        })
    }
}

/// Builds the symmetrized KNN graph at bandwidth `alpha`.
pub fn build_graph(index: &KnnIndex, alpha: f64) -> Result<SparseGraph, GraphError> {
    Arc::new(GraphPattern::from_index(index)).with_bandwidth(alpha)
}

/// Weighted KNN graph `Ã`, its density-normalized version `A = D̃⁻¹ÃD̃⁻¹` and
/// both degree vectors.
#[derive(Debug, Clone)]
pub struct SparseGraph {
    pattern: Arc<GraphPattern>,
    alpha: f64,
    tilde_adj: CsrMatrix,
    tilde_deg: Vec<f64>,
    adj: CsrMatrix,
    deg: Vec<f64>,
}

/// Derivatives of `A` and `D` with respect to `log α`.
#[derive(Debug, Clone)]
pub struct GraphDerivative {
    pub d_adj: CsrMatrix,
    pub d_deg: Vec<f64>,
}

/// Graph weights of an ambient point against the training nodes.
#[derive(Debug, Clone, PartialEq)]
pub struct Extension {
    /// Training node the point coincides with, if any. Its graph row is used.
    pub node: Option<usize>,
    pub neighbors: Vec<usize>,
    pub tilde_weights: Vec<f64>,
    /// `A(x, x_j)` aligned with `neighbors`.
    pub weights: Vec<f64>,
    pub tilde_degree: f64,
    pub degree: f64,
    /// Mean distance to the `K` nearest training points.
    pub manifold_distance: f64,
}

impl SparseGraph {
    pub fn pattern(&self) -> &Arc<GraphPattern> {
        &self.pattern
    }

    pub fn points(&self) -> &Arc<PointSet> {
        self.pattern.points()
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn k(&self) -> usize {
        self.pattern.k
    }

    pub fn len(&self) -> usize {
        self.pattern.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pattern.is_empty()
    }

    pub fn tilde_adj(&self) -> &CsrMatrix {
        &self.tilde_adj
    }

    pub fn tilde_deg(&self) -> &[f64] {
        &self.tilde_deg
    }

    pub fn adj(&self) -> &CsrMatrix {
        &self.adj
    }

    pub fn deg(&self) -> &[f64] {
        &self.deg
    }

    /// Same pattern, new bandwidth.
    pub fn rebuild(&self, alpha: f64) -> Result<SparseGraph, GraphError> {
        self.pattern.with_bandwidth(alpha)
    }

    /// `dÃ/dlogα = Ã d²/(2α²)` pushed through the density normalization.
    pub fn log_alpha_derivative(&self) -> GraphDerivative {
        let s = &self.pattern.structure;
        let n = self.len();
        let scale = 1.0 / (2.0 * self.alpha * self.alpha);
        let d_tilde: Vec<f64> = self
            .tilde_adj
            .values
            .iter()
            .zip(&self.pattern.sq_dists)
            .map(|(w, d2)| w * d2 * scale)
            .collect();
        let d_tilde_deg: Vec<f64> = (0..n).map(|i| d_tilde[s.row_range(i)].iter().sum()).collect();
        let rel: Vec<f64> = d_tilde_deg
            .iter()
            .zip(&self.tilde_deg)
            .map(|(d, t)| d / t)
            .collect();
        let mut d_adj = vec![0.0; s.nnz()];
        for i in 0..n {
            for p in s.row_range(i) {
                let j = s.col_idx[p];
                d_adj[p] = d_tilde[p] / (self.tilde_deg[i] * self.tilde_deg[j])
                    - self.adj.values[p] * (rel[i] + rel[j]);
            }
        }
        let d_adj = CsrMatrix::new(s.clone(), d_adj);
        let d_deg = d_adj.row_sums();
        GraphDerivative { d_adj, d_deg }
    }

    /// Extends `Ã`, `D̃`, `A` and `D` to an ambient point.
    ///
    /// A point that coincides with a training node gets that node's row, so
    /// the extension reproduces the graph exactly there. Any other point is
    /// connected to its `K` nearest training nodes.
    pub fn extend_weights(&self, x: &[f64]) -> Result<Extension, GraphError> {
        let points = self.points();
        if x.len() != points.dim() {
            return Err(GraphError::DimensionMismatch {
                expected: points.dim(),
                got: x.len(),
            });
        }
        let nearest = self.pattern.search.query(x, self.k().max(1));
        let manifold_distance =
            nearest.iter().map(|n| n.distance()).sum::<f64>() / nearest.len().max(1) as f64;
        if let Some(first) = nearest.first().filter(|n| n.sq_dist == 0.0) {
            let i = first.index;
            let (cols, tw) = self.tilde_adj.row(i);
            let (_, w) = self.adj.row(i);
            return Ok(Extension {
                node: Some(i),
                neighbors: cols.to_vec(),
                tilde_weights: tw.to_vec(),
                weights: w.to_vec(),
                tilde_degree: self.tilde_deg[i],
                degree: self.deg[i],
                manifold_distance,
            });
        }
        let scale = 1.0 / (4.0 * self.alpha * self.alpha);
        let neighbors: Vec<usize> = nearest.iter().map(|n| n.index).collect();
        let tilde_weights: Vec<f64> = nearest.iter().map(|n| (-n.sq_dist * scale).exp()).collect();
        let tilde_degree: f64 = tilde_weights.iter().sum();
        if !(tilde_degree >= DETACHED_THRESHOLD) {
            return Err(GraphError::NumericallyDetached { tilde_degree });
        }
        let weights: Vec<f64> = tilde_weights
            .iter()
            .zip(&neighbors)
            .map(|(w, &j)| (w / tilde_degree) / self.tilde_deg[j])
            .collect();
        let degree: f64 = weights.iter().sum();
        if !(degree > 0.0) {
            return Err(GraphError::NumericallyDetached { tilde_degree });
        }
        Ok(Extension {
            node: None,
            neighbors,
            tilde_weights,
            weights,
            tilde_degree,
            degree,
            manifold_distance,
        })
    }
}
