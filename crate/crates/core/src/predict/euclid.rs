use nalgebra::{Cholesky, DMatrix, DVector, Dyn};

use crate::graph::PointSet;
use crate::kernel::{EuclideanMatern, EuclideanSmoothness, RandomFourierFeatures};
use crate::linalg::LinalgError;
use crate::train::Adam;

use super::PredictError;

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(default)]
pub struct EuclideanFitConfig {
    pub smoothness: EuclideanSmoothness,
    pub iters: usize,
    pub learning_rate: f64,
    /// Lower bound on the noise variance, keeping the Gram matrix invertible.
    pub min_noise: f64,
    /// Above this many labels, switch to random Fourier features (always
    /// squared exponential) fitted on a subsample.
    pub rff_threshold: usize,
    pub rff_features: usize,
    pub rff_subsample: usize,
    pub seed: u64,
}

impl Default for EuclideanFitConfig {
    fn default() -> Self {
        Self {
            smoothness: EuclideanSmoothness::FiveHalves,
            iters: 300,
            learning_rate: 0.05,
            min_noise: 1e-6,
            rff_threshold: 5000,
            rff_features: 2000,
            rff_subsample: 2000,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone)]
pub enum EuclideanModel {
    Exact {
        train: Vec<Vec<f64>>,
        chol: Cholesky<f64, Dyn>,
        alpha: DVector<f64>,
    },
    Rff {
        features: RandomFourierFeatures,
        mean: DVector<f64>,
        /// Cholesky factor of the posterior weight precision.
        chol: Cholesky<f64, Dyn>,
    },
}

/// Stationary GP baseline in the ambient space, fitted only on labeled data.
#[derive(Debug, Clone)]
pub struct EuclideanGp {
    pub kernel: EuclideanMatern,
    pub noise2: f64,
    /// Log marginal likelihood at the fitted hyperparameters (exact model data).
    pub log_marginal: f64,
    model: EuclideanModel,
}

impl EuclideanGp {
    /// Maximizes the marginal likelihood over `(κ, σ², σ_ε²)` by Adam in log
    /// space, then conditions on the data.
    pub fn fit(x: &PointSet, y: &[f64], config: &EuclideanFitConfig) -> Result<Self, PredictError> {
        let rows: Vec<Vec<f64>> = (0..x.len()).map(|i| x.row(i).to_vec()).collect();
        Self::fit_rows(&rows, y, config)
    }

    pub fn fit_rows(x: &[Vec<f64>], y: &[f64], config: &EuclideanFitConfig) -> Result<Self, PredictError> {
        if x.len() != y.len() {
            return Err(PredictError::LengthMismatch(format!("{} inputs but {} labels", x.len(), y.len())));
        }
        if x.is_empty() {
            return Err(PredictError::InvalidInput("no labeled data for the Euclidean model".into()));
        }
        if x.len() > config.rff_threshold {
            return Self::fit_rff(x, y, config);
        }
        let (kernel, noise2) = optimize(x, y, config.smoothness, config)?;
        Self::condition(x, y, kernel, noise2)
    }

    /// Conditions with fixed hyperparameters.
    pub fn condition(x: &[Vec<f64>], y: &[f64], kernel: EuclideanMatern, noise2: f64) -> Result<Self, PredictError> {
        let (gram, _) = gram_matrices(x, &kernel);
        let n = x.len();
        let k = gram + DMatrix::identity(n, n) * noise2;
        let chol = k.cholesky().ok_or(LinalgError::NotPositiveDefinite)?;
        let yv = DVector::from_column_slice(y);
        let alpha = chol.solve(&yv);
        let log_det = 2.0 * chol.l_dirty().diagonal().iter().map(|d| d.ln()).sum::<f64>();
        let log_marginal = -0.5 * yv.dot(&alpha) - 0.5 * log_det - 0.5 * n as f64 * std::f64::consts::TAU.ln();
        Ok(Self {
            kernel,
            noise2,
            log_marginal,
            model: EuclideanModel::Exact { train: x.to_vec(), chol, alpha },
        })
    }

    fn fit_rff(x: &[Vec<f64>], y: &[f64], config: &EuclideanFitConfig) -> Result<Self, PredictError> {
        // hyperparameters from an evenly strided subsample, then a weight-space fit on everything
        let stride = x.len().div_ceil(config.rff_subsample.max(1));
        let sub_x: Vec<Vec<f64>> = x.iter().step_by(stride).cloned().collect();
        let sub_y: Vec<f64> = y.iter().step_by(stride).copied().collect();
        let (kernel, noise2) = optimize(&sub_x, &sub_y, EuclideanSmoothness::SquaredExponential, config)?;
        let features = RandomFourierFeatures::new(x[0].len(), config.rff_features, kernel.kappa, kernel.sigma2, config.seed);
        let m = features.len();
        let phi = DMatrix::from_fn(x.len(), m, |_, _| 0.0);
        let mut phi = phi;
        for (r, row) in x.iter().enumerate() {
            for (c, v) in features.features(row).into_iter().enumerate() {
                phi[(r, c)] = v;
            }
        }
        let precision = phi.transpose() * &phi / noise2 + DMatrix::identity(m, m);
        let chol = precision.cholesky().ok_or(LinalgError::NotPositiveDefinite)?;
        let mean = chol.solve(&(phi.transpose() * DVector::from_column_slice(y))) / noise2;
        Ok(Self {
            kernel,
            noise2,
            log_marginal: f64::NAN,
            model: EuclideanModel::Rff { features, mean, chol },
        })
    }

    pub fn model(&self) -> &EuclideanModel {
        &self.model
    }

    /// Posterior mean and latent-function variance at `x`.
    pub fn posterior(&self, x: &[f64]) -> (f64, f64) {
        match &self.model {
            EuclideanModel::Exact { train, chol, alpha } => {
                let kx = DVector::from_iterator(train.len(), train.iter().map(|t| self.kernel.eval(x, t)));
                let mean = kx.dot(alpha);
                let solved = chol.solve(&kx);
                let var = (self.kernel.sigma2 - kx.dot(&solved)).max(0.0);
                (mean, var)
            }
            EuclideanModel::Rff { features, mean, chol } => {
                let phi = DVector::from_vec(features.features(x));
                let var = phi.dot(&chol.solve(&phi)).max(0.0);
                (phi.dot(mean), var)
            }
        }
    }
}

fn gram_matrices(x: &[Vec<f64>], kernel: &EuclideanMatern) -> (DMatrix<f64>, DMatrix<f64>) {
    let n = x.len();
    let mut k = DMatrix::zeros(n, n);
    let mut dk = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in 0..=i {
            let r = x[i].iter().zip(&x[j]).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
            let v = kernel.eval_radius(r);
            let d = kernel.d_log_kappa(r);
            k[(i, j)] = v;
            k[(j, i)] = v;
            dk[(i, j)] = d;
            dk[(j, i)] = d;
        }
    }
    (k, dk)
}

/// Log marginal likelihood and its gradient in
/// `(log κ, log σ², log(σ_ε² − min_noise))`.
fn log_marginal(
    x: &[Vec<f64>],
    y: &DVector<f64>,
    theta: &[f64; 3],
    smoothness: EuclideanSmoothness,
    min_noise: f64,
) -> Option<(f64, [f64; 3])> {
    let kernel = EuclideanMatern::new(smoothness, theta[0].exp(), theta[1].exp());
    let extra = theta[2].exp();
    let n = x.len();
    let (kf, dk) = gram_matrices(x, &kernel);
    let k = &kf + DMatrix::identity(n, n) * (min_noise + extra);
    let chol = k.cholesky()?;
    let alpha = chol.solve(y);
    let log_det = 2.0 * chol.l_dirty().diagonal().iter().map(|d| d.ln()).sum::<f64>();
    let value = -0.5 * y.dot(&alpha) - 0.5 * log_det;
    let kinv = chol.inverse();
    let inner = &alpha * alpha.transpose() - kinv;
    let half_trace = |m: &DMatrix<f64>| 0.5 * inner.component_mul(m).sum();
    let grad = [half_trace(&dk), half_trace(&kf), 0.5 * extra * inner.trace()];
    value.is_finite().then_some((value, grad))
}

fn optimize(
    x: &[Vec<f64>],
    y: &[f64],
    smoothness: EuclideanSmoothness,
    config: &EuclideanFitConfig,
) -> Result<(EuclideanMatern, f64), PredictError> {
    let yv = DVector::from_column_slice(y);
    let mut dists = Vec::new();
    for i in 0..x.len() {
        for j in 0..i {
            dists.push(x[i].iter().zip(&x[j]).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt());
        }
    }
    dists.sort_by(f64::total_cmp);
    let median = dists.get(dists.len() / 2).copied().filter(|d| *d > 0.0).unwrap_or(1.0);
    let var = (yv.norm_squared() / y.len() as f64).max(1e-6);
    let mut theta = [median.ln(), var.ln(), (0.01 * var).ln()];
    let Some((mut best_value, _)) = log_marginal(x, &yv, &theta, smoothness, config.min_noise) else {
        return Err(LinalgError::NotPositiveDefinite.into());
    };
    let mut best = theta;
    let mut adam = Adam::new(3, config.learning_rate);
    for _ in 0..config.iters {
        match log_marginal(x, &yv, &theta, smoothness, config.min_noise) {
            Some((value, grad)) => {
                if value > best_value {
                    best_value = value;
                    best = theta;
                }
                adam.ascend(&mut theta, &grad, &[true, true, true]);
                // keep far from overflow / total collapse
                theta[2] = theta[2].max(-40.0);
            }
            None => {
                theta = best;
                adam.learning_rate *= 0.5;
            }
        }
    }
    if let Some((value, _)) = log_marginal(x, &yv, &theta, smoothness, config.min_noise) {
        if value > best_value {
            best = theta;
        }
    }
    Ok((
        EuclideanMatern::new(smoothness, best[0].exp(), best[1].exp()),
        config.min_noise + best[2].exp(),
    ))
}
