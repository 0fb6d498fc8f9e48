use std::sync::Arc;

use super::GraphError;

/// Row-major ambient coordinates, `len() x dim()`.
#[derive(Debug, Clone, PartialEq)]
pub struct PointSet {
    dim: usize,
    data: Vec<f64>,
}

impl PointSet {
    pub fn new(data: Vec<f64>, dim: usize) -> Result<Self, GraphError> {
        if dim == 0 {
            return Err(GraphError::InvalidInput("ambient dimension must be positive".into()));
        }
        if data.len() % dim != 0 {
            return Err(GraphError::DimensionMismatch {
                expected: dim,
                got: data.len() % dim,
            });
        }
        if let Some(pos) = data.iter().position(|v| !v.is_finite()) {
            return Err(GraphError::InvalidInput(format!(
                "non-finite coordinate in point {}",
                pos / dim
            )));
        }
        Ok(Self { dim, data })
    }

    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self, GraphError> {
        let dim = rows.first().map(|r| r.as_ref().len()).unwrap_or(1);
        let mut data = Vec::with_capacity(rows.len() * dim);
        for r in rows {
            let r = r.as_ref();
            if r.len() != dim {
                return Err(GraphError::DimensionMismatch {
                    expected: dim,
                    got: r.len(),
                });
            }
            data.extend_from_slice(r);
        }
        Self::new(data, dim)
    }

    pub fn len(&self) -> usize {
        self.data.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn sq_dist_to(&self, i: usize, x: &[f64]) -> f64 {
        sq_dist(self.row(i), x)
    }
}

pub(crate) fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(p, q)| (p - q) * (p - q)).sum()
}

/// Ambient points, some of which carry observations.
///
/// Labels are stored both raw and standardized (zero mean, unit population
/// standard deviation); everything downstream of ingestion works on the
/// standardized values and predictions are mapped back with
/// [`PointCloud::denormalize_mean`] / [`PointCloud::denormalize_variance`].
#[derive(Debug, Clone)]
pub struct PointCloud {
    points: Arc<PointSet>,
    labeled_idx: Vec<usize>,
    labels: Vec<f64>,
    raw_labels: Vec<f64>,
    label_mean: f64,
    label_scale: f64,
}

impl PointCloud {
    pub fn unlabeled(points: PointSet) -> Self {
        Self {
            points: Arc::new(points),
            labeled_idx: Vec::new(),
            labels: Vec::new(),
            raw_labels: Vec::new(),
            label_mean: 0.0,
            label_scale: 1.0,
        }
    }

    pub fn new(points: PointSet, labeled_idx: Vec<usize>, raw_labels: Vec<f64>) -> Result<Self, GraphError> {
        let n_points = points.len();
        if labeled_idx.len() != raw_labels.len() {
            return Err(GraphError::DimensionMismatch {
                expected: labeled_idx.len(),
                got: raw_labels.len(),
            });
        }
        let mut seen = vec![false; n_points];
        for &i in &labeled_idx {
            if i >= n_points {
                return Err(GraphError::InvalidInput(format!(
                    "labeled index {i} out of range for {n_points} points"
                )));
            }
            if std::mem::replace(&mut seen[i], true) {
                return Err(GraphError::InvalidInput(format!("labeled index {i} repeated")));
            }
        }
        if raw_labels.iter().any(|y| !y.is_finite()) {
            return Err(GraphError::InvalidInput("non-finite label".into()));
        }
        let (label_mean, label_scale) = standardization(&raw_labels);
        let labels = raw_labels
            .iter()
            .map(|y| (y - label_mean) / label_scale)
            .collect();
        Ok(Self {
            points: Arc::new(points),
            labeled_idx,
            labels,
            raw_labels,
            label_mean,
            label_scale,
        })
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.points.dim()
    }

    pub fn points(&self) -> &Arc<PointSet> {
        &self.points
    }

    pub fn point(&self, i: usize) -> &[f64] {
        self.points.row(i)
    }

    pub fn num_labeled(&self) -> usize {
        self.labeled_idx.len()
    }

    pub fn labeled_idx(&self) -> &[usize] {
        &self.labeled_idx
    }

    /// Standardized observations, aligned with [`Self::labeled_idx`].
    pub fn labels(&self) -> &[f64] {
        &self.labels
    }

    pub fn raw_labels(&self) -> &[f64] {
        &self.raw_labels
    }

    pub fn label_mean(&self) -> f64 {
        self.label_mean
    }

    pub fn label_scale(&self) -> f64 {
        self.label_scale
    }

    pub fn denormalize_mean(&self, m: f64) -> f64 {
        m * self.label_scale + self.label_mean
    }

    pub fn denormalize_variance(&self, v: f64) -> f64 {
        v * self.label_scale * self.label_scale
    }

    /// Raw label per node, `None` for unlabeled ones.
    pub fn raw_label_column(&self) -> Vec<Option<f64>> {
        let mut out = vec![None; self.len()];
        for (&i, &y) in self.labeled_idx.iter().zip(&self.raw_labels) {
            out[i] = Some(y);
        }
        out
    }
}

/// Mean and population standard deviation; degenerate samples get unit scale.
fn standardization(y: &[f64]) -> (f64, f64) {
    if y.is_empty() {
        return (0.0, 1.0);
    }
    let n = y.len() as f64;
    let mean = y.iter().sum::<f64>() / n;
    let var = y.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    let sd = var.sqrt();
    if y.len() < 2 || !(sd > 0.0) {
        (mean, 1.0)
    } else {
        (mean, sd)
    }
}
