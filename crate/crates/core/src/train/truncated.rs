use nalgebra::{DMatrix, DVector};

use crate::kernel::{phi, HyperParams};
use crate::linalg::{EigenBasis, LinalgError};

use super::{Adam, PriorSpec, TrainError};

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(default)]
pub struct TruncatedConfig {
    pub iters: usize,
    pub learning_rate: f64,
    /// Stop once every active gradient coordinate is below this.
    pub grad_tol: f64,
    /// Diagonal added to the covariance on top of the noise variance.
    pub jitter: f64,
    /// Divide the kernel by the mean of its diagonal over all nodes.
    pub normalize: bool,
    /// In noiseless runs, still learn a noise variance (starting from
    /// `nugget_init`) to absorb what the truncated basis cannot represent.
    pub nugget: bool,
    pub nugget_init: f64,
}

impl Default for TruncatedConfig {
    fn default() -> Self {
        Self {
            iters: 2000,
            learning_rate: 0.05,
            grad_tol: 1e-7,
            jitter: 1e-8,
            normalize: false,
            nugget: true,
            nugget_init: 1e-4,
        }
    }
}

#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct TruncatedFit {
    pub params: HyperParams,
    pub objective: f64,
    pub initial_objective: f64,
    pub iterations: usize,
    pub norm_const: f64,
}

/// Everything about the truncated model that does not depend on the
/// hyperparameters being optimized.
struct Model<'a> {
    lambdas: &'a [f64],
    phi_z: DMatrix<f64>,
    gram: DMatrix<f64>,
    proj_y: DVector<f64>,
    y: DVector<f64>,
    mean_sq: Vec<f64>,
}

impl<'a> Model<'a> {
    fn new(basis: &'a EigenBasis, labeled: &[usize], y: &[f64]) -> Self {
        let l = basis.len();
        let phi_z = DMatrix::from_fn(labeled.len(), l, |r, c| basis.eigenvectors[(labeled[r], c)]);
        let n_all = basis.num_nodes() as f64;
        let mean_sq = (0..l)
            .map(|c| basis.eigenvectors.column(c).iter().map(|v| v * v).sum::<f64>() / n_all)
            .collect();
        let y = DVector::from_column_slice(y);
        Self {
            lambdas: &basis.eigenvalues,
            gram: phi_z.transpose() * &phi_z,
            proj_y: phi_z.transpose() * &y,
            phi_z,
            y,
            mean_sq,
        }
    }

    /// Weights `σ² Φ(λ_l) / C` with `d log w_l / d log κ`, and `C`.
    fn weights(&self, p: &HyperParams, normalize: bool) -> (Vec<f64>, Vec<f64>, f64) {
        let c = p.shift();
        let nu = p.nu as f64;
        let dens: Vec<f64> = self.lambdas.iter().map(|&l| phi(l, p.nu, p.kappa)).collect();
        let mut dlog: Vec<f64> = self.lambdas.iter().map(|&l| 2.0 * nu * c / (c + l)).collect();
        let mut norm_const = 1.0;
        if normalize {
            norm_const = dens.iter().zip(&self.mean_sq).map(|(d, g)| d * g).sum::<f64>();
            let d_norm = dens
                .iter()
                .zip(&self.mean_sq)
                .zip(&dlog)
                .map(|((d, g), dl)| d * g * dl)
                .sum::<f64>()
                / norm_const;
            dlog.iter_mut().for_each(|v| *v -= d_norm);
        }
        let w = dens.iter().map(|d| p.sigma2 * d / norm_const).collect();
        (w, dlog, norm_const)
    }

    /// Returns `(ℓ, ∂ℓ/∂(log κ, log σ², log σ_ε²))` with
    /// `ℓ = −log det K − yᵀK⁻¹y`, `K = Φ W Φᵀ + s I`.
    fn evaluate(&self, p: &HyperParams, config: &TruncatedConfig) -> Result<(f64, [f64; 3], f64), TrainError> {
        let (w, dlog, norm_const) = self.weights(p, config.normalize);
        let s = p.noise2 + config.jitter;
        let n = self.phi_z.nrows();
        let l = self.phi_z.ncols();
        let (log_det, quad, diag_q, proj_alpha, tr_kinv, alpha_sq) = if n <= l || !(s > 0.0) {
            self.dense_terms(&w, s)?
        } else {
            self.woodbury_terms(&w, s)?
        };
        let value = -log_det - quad;
        let mut d_weights = [0.0, 0.0];
        for c in 0..l {
            let wc = w[c];
            let fit = proj_alpha[c] * proj_alpha[c] - diag_q[c];
            d_weights[0] += wc * dlog[c] * fit;
            d_weights[1] += wc * fit;
        }
        let d_noise = p.noise2 * (alpha_sq - tr_kinv);
        Ok((value, [d_weights[0], d_weights[1], d_noise], norm_const))
    }

    #[allow(clippy::type_complexity)]
    fn dense_terms(
        &self,
        w: &[f64],
        s: f64,
    ) -> Result<(f64, f64, Vec<f64>, DVector<f64>, f64, f64), TrainError> {
        let n = self.phi_z.nrows();
        let scaled = DMatrix::from_fn(n, w.len(), |r, c| self.phi_z[(r, c)] * w[c]);
        let mut k = scaled * self.phi_z.transpose();
        for i in 0..n {
            k[(i, i)] += s;
        }
        let chol = k.cholesky().ok_or(LinalgError::NotPositiveDefinite)?;
        let log_det = 2.0 * chol.l_dirty().diagonal().iter().map(|d| d.ln()).sum::<f64>();
        let alpha = chol.solve(&self.y);
        let kinv_phi = chol.solve(&self.phi_z);
        let diag_q = (0..w.len()).map(|c| self.phi_z.column(c).dot(&kinv_phi.column(c))).collect();
        let kinv = chol.inverse();
        Ok((
            log_det,
            self.y.dot(&alpha),
            diag_q,
            self.phi_z.transpose() * &alpha,
            kinv.trace(),
            alpha.norm_squared(),
        ))
    }

    #[allow(clippy::type_complexity)]
    fn woodbury_terms(
        &self,
        w: &[f64],
        s: f64,
    ) -> Result<(f64, f64, Vec<f64>, DVector<f64>, f64, f64), TrainError> {
        let n = self.phi_z.nrows() as f64;
        let l = w.len();
        let mut m = self.gram.clone();
        for c in 0..l {
            m[(c, c)] += s / w[c];
        }
        let chol = m.cholesky().ok_or(LinalgError::NotPositiveDefinite)?;
        let log_det_m = 2.0 * chol.l_dirty().diagonal().iter().map(|d| d.ln()).sum::<f64>();
        let log_det = (n - l as f64) * s.ln() + w.iter().map(|v| v.ln()).sum::<f64>() + log_det_m;
        let u = chol.solve(&self.proj_y);
        let yy = self.y.norm_squared();
        let quad = (yy - self.proj_y.dot(&u)) / s;
        let minv_g = chol.solve(&self.gram);
        let q = (&self.gram - &self.gram * &minv_g) / s;
        let diag_q = (0..l).map(|c| q[(c, c)]).collect();
        let proj_alpha = (&self.proj_y - &self.gram * &u) / s;
        let tr_kinv = (n - minv_g.trace()) / s;
        let alpha_sq = (yy - 2.0 * u.dot(&self.proj_y) + u.dot(&(&self.gram * &u))) / (s * s);
        Ok((log_det, quad, diag_q, proj_alpha, tr_kinv, alpha_sq))
    }
}

/// `−log det K − yᵀK⁻¹y` of the truncated model on the labeled nodes: twice
/// the log-likelihood up to a constant, in the same convention as
/// [`super::log_likelihood`].
pub fn truncated_log_likelihood(
    basis: &EigenBasis,
    labeled: &[usize],
    y: &[f64],
    params: &HyperParams,
    config: &TruncatedConfig,
) -> Result<f64, TrainError> {
    check(basis, labeled, y)?;
    Ok(Model::new(basis, labeled, y).evaluate(params, config)?.0)
}

fn check(basis: &EigenBasis, labeled: &[usize], y: &[f64]) -> Result<(), TrainError> {
    if labeled.is_empty() {
        return Err(TrainError::NoLabels);
    }
    if labeled.len() != y.len() {
        return Err(TrainError::InvalidConfig(format!(
            "{} labeled indices but {} observations",
            labeled.len(),
            y.len()
        )));
    }
    if let Some(&bad) = labeled.iter().find(|&&i| i >= basis.num_nodes()) {
        return Err(TrainError::InvalidConfig(format!("bad labeled index {bad}")));
    }
    Ok(())
}

/// Refits `(κ, σ², σ_ε²)` against the exact likelihood of the truncated
/// eigenbasis, with `α` (and so the basis) held fixed.
///
/// The full-graph fit runs few, small steps and tends to leave `κ` far too
/// small; in the `L`-dimensional feature space exact gradients are cheap so
/// many more steps can be afforded. Returns the best point visited.
///
/// With `config.nugget` a noiseless run also gets a learned noise variance
/// here; it stays in the returned parameters and so enters prediction.
pub fn reoptimize_truncated(
    basis: &EigenBasis,
    labeled: &[usize],
    y: &[f64],
    start: &HyperParams,
    priors: &PriorSpec,
    noisy: bool,
    config: &TruncatedConfig,
) -> Result<TruncatedFit, TrainError> {
    check(basis, labeled, y)?;
    let model = Model::new(basis, labeled, y);
    // a nugget has no prior: only the likelihood decides how much the basis misses
    let nugget = !noisy && config.nugget;
    let objective = |p: &HyperParams| -> Result<(f64, [f64; 3], f64), TrainError> {
        let (v, g, c) = model.evaluate(p, config)?;
        let gp = priors.grad_log_prior(p, noisy);
        let value = 0.5 * v + priors.log_prior(p, noisy);
        Ok((value, [0.5 * g[0] + gp[1], 0.5 * g[1] + gp[2], 0.5 * g[2] + gp[3]], c))
    };
    let mut current = *start;
    if nugget {
        current.noise2 = config.nugget_init;
    } else if !noisy {
        current.noise2 = 0.0;
    }
    let (initial_objective, _, initial_c) = objective(&current)?;
    let mut best = TruncatedFit {
        params: current,
        objective: initial_objective,
        initial_objective,
        iterations: 0,
        norm_const: initial_c,
    };
    let learn_noise = noisy || nugget;
    let active = [true, true, learn_noise];
    let mut theta = [current.kappa.ln(), current.sigma2.ln(), current.noise2.ln()];
    let mut adam = Adam::new(3, config.learning_rate);
    for it in 0..config.iters {
        let p = HyperParams {
            kappa: theta[0].exp(),
            sigma2: theta[1].exp(),
            noise2: if learn_noise { theta[2].exp() } else { 0.0 },
            ..*start
        };
        let Ok((value, grad, c)) = objective(&p) else {
            adam.learning_rate *= 0.5;
            theta = [best.params.kappa.ln(), best.params.sigma2.ln(), best.params.noise2.ln()];
            continue;
        };
        if value.is_finite() && value > best.objective {
            best.params = p;
            best.objective = value;
            best.norm_const = c;
        }
        best.iterations = it + 1;
        if grad.iter().zip(&active).all(|(g, &a)| !a || g.abs() < config.grad_tol) {
            break;
        }
        adam.ascend(&mut theta, &grad, &active);
    }
    Ok(best)
}
