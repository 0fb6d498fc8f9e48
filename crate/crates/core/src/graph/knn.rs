use std::cmp::Ordering;
use std::sync::Arc;

use rayon::prelude::*;

use super::cloud::{sq_dist, PointSet};
use super::GraphError;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Neighbor {
    pub index: usize,
    pub sq_dist: f64,
}

impl Neighbor {
    pub fn distance(&self) -> f64 {
        self.sq_dist.sqrt()
    }
}

/// Nearest-neighbor backend. Results are sorted by nondecreasing distance with
/// ties going to the smaller index.
pub trait NeighborSearch: Send + Sync {
    fn points(&self) -> &Arc<PointSet>;

    /// The `k` training points nearest to an arbitrary ambient point.
    fn query(&self, x: &[f64], k: usize) -> Vec<Neighbor>;

    /// The `k` nearest training points to node `i`, excluding `i` itself.
    fn neighbors_of_node(&self, i: usize, k: usize) -> Vec<Neighbor>;
}

/// Exact all-pairs search with partial selection.
#[derive(Debug, Clone)]
pub struct KnnIndex {
    points: Arc<PointSet>,
    k: usize,
}

impl KnnIndex {
    pub fn new(points: Arc<PointSet>, k: usize) -> Result<Self, GraphError> {
        let n = points.len();
        if n == 0 {
            return Err(GraphError::EmptyCloud);
        }
        if k == 0 {
            return Err(GraphError::InvalidInput("neighbor count K must be at least 1".into()));
        }
        if k >= n {
            return Err(GraphError::KTooLarge { k, n });
        }
        Ok(Self { points, k })
    }

    /// Skips the `K < N` check; for hand-built graphs such as a single node.
    pub fn new_unchecked(points: Arc<PointSet>, k: usize) -> Self {
        Self { points, k }
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Node neighborhoods for every training point, computed in parallel.
    pub fn all_node_neighbors(&self) -> Vec<Vec<Neighbor>> {
        (0..self.len())
            .into_par_iter()
            .map(|i| self.neighbors_of_node(i, self.k))
            .collect()
    }

    fn select(&self, x: &[f64], k: usize, skip: Option<usize>) -> Vec<Neighbor> {
        let mut all: Vec<Neighbor> = (0..self.points.len())
            .filter(|&j| Some(j) != skip)
            .map(|j| Neighbor {
                index: j,
                sq_dist: sq_dist(self.points.row(j), x),
            })
            .collect();
        let k = k.min(all.len());
        if k == 0 {
            return Vec::new();
        }
        if k < all.len() {
            all.select_nth_unstable_by(k - 1, order);
            all.truncate(k);
        }
        all.sort_by(order);
        all
    }
}

fn order(a: &Neighbor, b: &Neighbor) -> Ordering {
    a.sq_dist
        .total_cmp(&b.sq_dist)
        .then_with(|| a.index.cmp(&b.index))
}

impl NeighborSearch for KnnIndex {
    fn points(&self) -> &Arc<PointSet> {
        &self.points
    }

    fn query(&self, x: &[f64], k: usize) -> Vec<Neighbor> {
        assert_eq!(x.len(), self.points.dim(), "query dimension");
        self.select(x, k, None)
    }

    fn neighbors_of_node(&self, i: usize, k: usize) -> Vec<Neighbor> {
        self.select(self.points.row(i), k, Some(i))
    }
}
