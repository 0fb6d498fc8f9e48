use super::ExperimentError;

/// Variances below this are raised to it before computing the NLL.
pub const VARIANCE_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct Scores {
    pub rmse: f64,
    /// Mean per-point Gaussian negative log predictive density.
    pub nll: f64,
    pub floored_variance_count: usize,
}

/// RMSE and mean NLL of Gaussian predictions against the truth.
pub fn metrics(means: &[f64], variances: &[f64], truth: &[f64]) -> Result<Scores, ExperimentError> {
    if means.len() != variances.len() || means.len() != truth.len() {
        return Err(ExperimentError::LengthMismatch(format!(
            "{} means, {} variances, {} truths",
            means.len(),
            variances.len(),
            truth.len()
        )));
    }
    if means.is_empty() {
        return Err(ExperimentError::LengthMismatch("no predictions to score".into()));
    }
    let n = means.len() as f64;
    let mut sq = 0.0;
    let mut nll = 0.0;
    let mut floored = 0;
    for ((&m, &v), &y) in means.iter().zip(variances).zip(truth) {
        let v = if v < VARIANCE_FLOOR {
            floored += 1;
            VARIANCE_FLOOR
        } else {
            v
        };
        let r = y - m;
        sq += r * r;
        nll += 0.5 * (std::f64::consts::TAU * v).ln() + r * r / (2.0 * v);
    }
    Ok(Scores { rmse: (sq / n).sqrt(), nll: nll / n, floored_variance_count: floored })
}
