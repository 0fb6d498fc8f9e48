use super::{EuclideanGp, GeometricPosterior, PredictError, Prediction};

/// `exp(1 − r²/(r² − d²))` inside `d < r = 3α`, zero outside.
pub fn bump_weight(dist: f64, alpha: f64) -> f64 {
    let r2 = 9.0 * alpha * alpha;
    let d2 = dist * dist;
    if d2 >= r2 {
        0.0
    } else {
        (1.0 - r2 / (r2 - d2)).exp()
    }
}

/// Geometric posterior near the data manifold, Euclidean posterior away from
/// it, blended by a bump in the distance to the point cloud.
///
/// Either component may be absent; the prediction then comes from the other
/// alone with `gamma` fixed at 1 (geometric) or 0 (Euclidean).
#[derive(Debug, Clone)]
pub struct HybridPredictor {
    pub geometric: Option<GeometricPosterior>,
    pub euclidean: Option<EuclideanGp>,
}

impl HybridPredictor {
    pub fn new(geometric: Option<GeometricPosterior>, euclidean: Option<EuclideanGp>) -> Result<Self, PredictError> {
        if geometric.is_none() && euclidean.is_none() {
            return Err(PredictError::InvalidInput("hybrid predictor needs at least one component".into()));
        }
        Ok(Self { geometric, euclidean })
    }

    /// `3α`, or 0 without a geometric component.
    pub fn blend_radius(&self) -> f64 {
        self.geometric.as_ref().map_or(0.0, |g| 3.0 * g.params().alpha)
    }

    /// Mean distance from `x` to its `K` nearest cloud points.
    pub fn manifold_distance(&self, x: &[f64]) -> Option<f64> {
        let graph = self.geometric.as_ref()?.graph();
        let near = graph.pattern().search().query(x, graph.k().max(1));
        Some(near.iter().map(|n| n.distance()).sum::<f64>() / near.len().max(1) as f64)
    }

    pub fn gamma(&self, x: &[f64]) -> f64 {
        match (&self.geometric, &self.euclidean) {
            (Some(g), Some(_)) => bump_weight(self.manifold_distance(x).unwrap_or(f64::INFINITY), g.params().alpha),
            (Some(_), None) => 1.0,
            _ => 0.0,
        }
    }

    pub fn predict(&self, x: &[f64]) -> Result<Prediction, PredictError> {
        match (&self.geometric, &self.euclidean) {
            (Some(g), None) => {
                let (mean, variance) = g.posterior(x)?;
                Ok(Prediction { mean, variance, gamma: 1.0 })
            }
            (None, Some(e)) => {
                let (mean, variance) = e.posterior(x);
                Ok(Prediction { mean, variance, gamma: 0.0 })
            }
            (Some(g), Some(e)) => {
                let gamma = self.gamma(x);
                let (me, ve) = e.posterior(x);
                if gamma == 0.0 {
                    return Ok(Prediction { mean: me, variance: ve, gamma });
                }
                let (mm, vm) = g.posterior(x)?;
                Ok(Prediction {
                    mean: gamma * mm + (1.0 - gamma) * me,
                    variance: gamma * gamma * vm + (1.0 - gamma) * (1.0 - gamma) * ve,
                    gamma,
                })
            }
            (None, None) => unreachable!("checked in the constructor"),
        }
    }
}
