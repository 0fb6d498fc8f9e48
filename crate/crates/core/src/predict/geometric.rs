use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::graph::{Extension, SparseGraph};
use crate::kernel::{HyperParams, SpectralKernel};
use crate::linalg::EigenBasis;

use super::{NystromExtension, PredictError};

/// Singular values below this fraction of the largest are treated as zero
/// when conditioning without observation noise.
const RANK_TOLERANCE: f64 = 1e-12;

/// Posterior of the truncated graph Matérn GP given labels on some nodes.
///
/// The truncated kernel is the covariance of `f(x) = ψ(x)ᵀγ` with
/// `γ ~ N(0, I)` and `ψ_l(x) = sqrt(w_l) f_l(x)`, so conditioning is done on
/// `γ`: with `Ψ_Z = U S Vᵀ`, the posterior is `γ | y ~ N(V S/(S²+s) Uᵀy,
/// I − V diag(S²/(S²+s)) Vᵀ)`.
#[derive(Debug, Clone)]
pub struct GeometricPosterior {
    extension: NystromExtension,
    params: HyperParams,
    norm_const: f64,
    sqrt_weights: Vec<f64>,
    mean_coef: DVector<f64>,
    /// `L x r`, right singular vectors of the weighted labeled features.
    v: DMatrix<f64>,
    /// `S²/(S² + s)` per retained singular value.
    shrink: Vec<f64>,
}

impl GeometricPosterior {
    pub fn new(
        graph: SparseGraph,
        basis: EigenBasis,
        params: HyperParams,
        norm_const: f64,
        labeled: &[usize],
        y: &[f64],
    ) -> Result<Self, PredictError> {
        params.validate()?;
        if labeled.len() != y.len() {
            return Err(PredictError::LengthMismatch(format!(
                "{} labeled nodes but {} labels",
                labeled.len(),
                y.len()
            )));
        }
        if let Some(&bad) = labeled.iter().find(|&&i| i >= graph.len()) {
            return Err(PredictError::InvalidInput(format!("labeled index {bad} out of range")));
        }
        let extension = NystromExtension::new(graph, basis)?;
        let basis = extension.basis();
        let l = basis.len();
        let kernel = SpectralKernel::new(basis.clone(), params, norm_const);
        let sqrt_weights: Vec<f64> = kernel.weights().iter().map(|w| w.sqrt()).collect();

        let (mean_coef, v, shrink) = if labeled.is_empty() || l == 0 {
            (DVector::zeros(l), DMatrix::zeros(l, 0), Vec::new())
        } else {
            let psi = DMatrix::from_fn(labeled.len(), l, |r, c| basis.eigenvectors[(labeled[r], c)] * sqrt_weights[c]);
            let svd = psi.svd(true, true);
            let u = svd.u.expect("requested U");
            let vt = svd.v_t.expect("requested V");
            let smax = svd.singular_values.max();
            let s2 = params.noise2;
            let keep: Vec<usize> = (0..svd.singular_values.len())
                .filter(|&i| svd.singular_values[i] > RANK_TOLERANCE * smax && svd.singular_values[i] > 0.0)
                .collect();
            let yv = DVector::from_column_slice(y);
            let mut mean_coef = DVector::zeros(l);
            let mut v = DMatrix::zeros(l, keep.len());
            let mut shrink = Vec::with_capacity(keep.len());
            for (c, &i) in keep.iter().enumerate() {
                let s = svd.singular_values[i];
                let proj = u.column(i).dot(&yv);
                let vi = vt.row(i).transpose();
                mean_coef += &vi * (s / (s * s + s2) * proj);
                v.set_column(c, &vi);
                shrink.push(s * s / (s * s + s2));
            }
            (mean_coef, v, shrink)
        };
        Ok(Self { extension, params, norm_const, sqrt_weights, mean_coef, v, shrink })
    }

    pub fn params(&self) -> &HyperParams {
        &self.params
    }

    pub fn norm_const(&self) -> f64 {
        self.norm_const
    }

    pub fn graph(&self) -> &SparseGraph {
        self.extension.graph()
    }

    pub fn extension(&self) -> &NystromExtension {
        &self.extension
    }

    /// Number of eigenpairs actually used after dropping unextendable ones.
    pub fn num_features(&self) -> usize {
        self.sqrt_weights.len()
    }

    /// Weighted features `ψ(x)` so that `k(x, x') = ψ(x)ᵀψ(x')`.
    pub fn weighted_features(&self, x: &[f64]) -> Result<Vec<f64>, PredictError> {
        let f = self.extension.features(x)?;
        Ok(self.weighted(f))
    }

    fn weighted(&self, f: Vec<f64>) -> Vec<f64> {
        f.into_iter().zip(&self.sqrt_weights).map(|(v, w)| v * w).collect()
    }

    /// Posterior mean and variance of the latent function at `x`, with the
    /// variance clamped at zero (a warning is logged below `−1e-10`).
    pub fn posterior(&self, x: &[f64]) -> Result<(f64, f64), PredictError> {
        let psi = self.weighted_features(x)?;
        Ok(self.posterior_psi(&psi))
    }

    pub fn posterior_from(&self, ext: &Extension) -> (f64, f64) {
        let psi = self.weighted(self.extension.features_from(ext));
        self.posterior_psi(&psi)
    }

    fn posterior_psi(&self, psi: &[f64]) -> (f64, f64) {
        let mean: f64 = psi.iter().zip(self.mean_coef.iter()).map(|(a, b)| a * b).sum();
        let prior: f64 = psi.iter().map(|a| a * a).sum();
        let mut explained = 0.0;
        for (c, d) in self.shrink.iter().enumerate() {
            let p: f64 = psi.iter().zip(self.v.column(c).iter()).map(|(a, b)| a * b).sum();
            explained += d * p * p;
        }
        let mut var = prior - explained;
        if var < 0.0 {
            if var < -1e-10 * prior.max(1.0) {
                log::warn!("negative posterior variance {var:.3e} clamped to zero");
            }
            var = 0.0;
        }
        (mean, var)
    }

    /// Prior kernel value between two points.
    pub fn prior_kernel(&self, x: &[f64], x2: &[f64]) -> Result<f64, PredictError> {
        let a = self.weighted_features(x)?;
        let b = self.weighted_features(x2)?;
        Ok(a.iter().zip(&b).map(|(p, q)| p * q).sum())
    }

    /// Joint posterior samples of the latent function, `n_samples x points`.
    pub fn sample_posterior<P: AsRef<[f64]>>(
        &self,
        points: &[P],
        n_samples: usize,
        seed: u64,
    ) -> Result<DMatrix<f64>, PredictError> {
        let psi: Vec<Vec<f64>> = points.iter().map(|p| self.weighted_features(p.as_ref())).collect::<Result<_, _>>()?;
        let l = self.num_features();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        // (I − V D Vᵀ)^{1/2} = I − V (1 − sqrt(1 − D)) Vᵀ since V has orthonormal columns
        let root: Vec<f64> = self.shrink.iter().map(|d| 1.0 - (1.0 - d).max(0.0).sqrt()).collect();
        let mut out = DMatrix::zeros(n_samples, points.len());
        for s in 0..n_samples {
            let xi = DVector::from_fn(l, |_, _| StandardNormal.sample(&mut rng));
            let mut gamma = &self.mean_coef + &xi;
            for (c, r) in root.iter().enumerate() {
                let col = self.v.column(c);
                let coef = r * col.dot(&xi);
                gamma -= col * coef;
            }
            for (p, feat) in psi.iter().enumerate() {
                out[(s, p)] = feat.iter().zip(gamma.iter()).map(|(a, b)| a * b).sum();
            }
        }
        Ok(out)
    }
}

/// Truncated graph Matérn kernel between two ambient points through their
/// Nyström features.
pub fn kernel_eval_ambient(
    kernel: &SpectralKernel,
    graph: &SparseGraph,
    x: &[f64],
    x2: &[f64],
) -> Result<f64, PredictError> {
    let ext = NystromExtension::new(graph.clone(), kernel.basis.clone())?;
    let trimmed = SpectralKernel::new(ext.basis().clone(), kernel.params, kernel.norm_const);
    Ok(trimmed.eval_features(&ext.features(x)?, &ext.features(x2)?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{build_graph, EigenConfig, EigenSolver, KnnIndex, PointSet};
    use rand::Rng;
    use std::sync::Arc;

    fn setup(n: usize, l: usize, seed: u64) -> (SparseGraph, EigenBasis) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut data = Vec::new();
        for _ in 0..n {
            let t: f64 = rng.random_range(0.0..std::f64::consts::TAU);
            data.extend([t.cos() * (1.0 + 0.3 * (2.0 * t).sin()), t.sin()]);
        }
        let index = KnnIndex::new(Arc::new(PointSet::new(data, 2).unwrap()), 7).unwrap();
        let graph = build_graph(&index, 0.2).unwrap();
        let basis = graph.eigenbasis(l, &EigenConfig { solver: EigenSolver::Dense, ..Default::default() }).unwrap();
        // only the extendable part of the spectrum enters the posterior
        NystromExtension::new(graph, basis).unwrap().into_parts()
    }

    fn params(noise2: f64) -> HyperParams {
        HyperParams { alpha: 0.2, kappa: 2.0, sigma2: 1.3, noise2, ..Default::default() }
    }

    fn gram_posterior(k: &DMatrix<f64>, labeled: &[usize], y: &[f64], s: f64, i: usize) -> (f64, f64) {
        let n = labeled.len();
        let mut kzz = DMatrix::from_fn(n, n, |a, b| k[(labeled[a], labeled[b])]);
        for a in 0..n {
            kzz[(a, a)] += s;
        }
        let kxz = DVector::from_fn(n, |a, _| k[(i, labeled[a])]);
        let inv = kzz.try_inverse().unwrap();
        let mean = kxz.dot(&(&inv * DVector::from_column_slice(y)));
        let var = k[(i, i)] - kxz.dot(&(&inv * &kxz));
        (mean, var)
    }

    #[test]
    fn matches_gram_space_formula() {
        let (graph, basis) = setup(60, 40, 1);
        let labeled: Vec<usize> = (0..60).step_by(2).take(25).collect();
        let y: Vec<f64> = labeled.iter().map(|&i| (i as f64 * 0.4).sin()).collect();
        let p = params(0.05);
        let k = SpectralKernel::new(basis.clone(), p, 1.0).gram();
        let post = GeometricPosterior::new(graph.clone(), basis, p, 1.0, &labeled, &y).unwrap();
        for i in 0..60 {
            let (m, v) = post.posterior(graph.points().row(i)).unwrap();
            let (mo, vo) = gram_posterior(&k, &labeled, &y, 0.05, i);
            assert!((m - mo).abs() < 1e-8, "{m} vs {mo}");
            assert!((v - vo).abs() < 1e-8, "{v} vs {vo}");
        }
    }

    #[test]
    fn noiseless_interpolates_labels() {
        let (graph, basis) = setup(60, 40, 2);
        let labeled = vec![0, 5, 11, 17, 30, 44];
        let y = vec![0.5, -1.0, 0.2, 1.3, -0.4, 0.0];
        let post = GeometricPosterior::new(graph.clone(), basis, params(0.0), 1.0, &labeled, &y).unwrap();
        for (&i, &yi) in labeled.iter().zip(&y) {
            let (m, v) = post.posterior(graph.points().row(i)).unwrap();
            assert!((m - yi).abs() < 1e-8);
            assert!(v <= 1e-8);
        }
    }

    #[test]
    fn no_labels_gives_prior() {
        let (graph, basis) = setup(40, 20, 3);
        let p = params(0.0);
        let k = SpectralKernel::new(basis.clone(), p, 1.0);
        let post = GeometricPosterior::new(graph.clone(), basis, p, 1.0, &[], &[]).unwrap();
        let (m, v) = post.posterior(graph.points().row(7)).unwrap();
        assert_eq!(m, 0.0);
        assert!((v - k.eval_nodes(7, 7)).abs() < 1e-12);
    }

    #[test]
    fn variance_below_prior_and_nonnegative() {
        let (graph, basis) = setup(50, 30, 4);
        let labeled: Vec<usize> = (0..50).step_by(5).collect();
        let y: Vec<f64> = labeled.iter().map(|&i| i as f64 / 50.0).collect();
        let post = GeometricPosterior::new(graph, basis, params(0.01), 1.0, &labeled, &y).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..100 {
            let t: f64 = rng.random_range(0.0..std::f64::consts::TAU);
            let x = [t.cos() * (1.0 + 0.3 * (2.0 * t).sin()) + 0.02, t.sin()];
            let (_, v) = post.posterior(&x).unwrap();
            let prior = post.prior_kernel(&x, &x).unwrap();
            assert!(v >= 0.0 && v <= prior + 1e-10);
        }
    }

    #[test]
    fn ambient_kernel_consistent_and_psd() {
        let (graph, basis) = setup(50, 25, 6);
        let kernel = SpectralKernel::new(basis, params(0.0), 1.3);
        for (i, j) in [(0, 0), (3, 9), (10, 40)] {
            let a = kernel_eval_ambient(&kernel, &graph, graph.points().row(i), graph.points().row(j)).unwrap();
            assert!((a - kernel.eval_nodes(i, j)).abs() < 1e-10);
        }
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let pts: Vec<[f64; 2]> = (0..10)
            .map(|_| {
                let t: f64 = rng.random_range(0.0..std::f64::consts::TAU);
                [t.cos() * (1.0 + 0.3 * (2.0 * t).sin()) * 1.03, t.sin()]
            })
            .collect();
        let g = DMatrix::from_fn(10, 10, |i, j| kernel_eval_ambient(&kernel, &graph, &pts[i], &pts[j]).unwrap());
        assert!(g.symmetric_eigen().eigenvalues.min() > -1e-10);
    }

    #[test]
    fn samples_match_posterior_moments() {
        let (graph, basis) = setup(50, 30, 8);
        let labeled = vec![1, 9, 20, 33];
        let y = vec![0.3, -0.7, 1.1, 0.0];
        let post = GeometricPosterior::new(graph.clone(), basis, params(0.0), 1.0, &labeled, &y).unwrap();
        let pts: Vec<Vec<f64>> = [2usize, 9, 15, 27, 40].iter().map(|&i| graph.points().row(i).to_vec()).collect();
        let samples = post.sample_posterior(&pts, 5000, 11).unwrap();
        for (p, x) in pts.iter().enumerate() {
            let (m, v) = post.posterior(x).unwrap();
            let col = samples.column(p);
            let mean = col.mean();
            let var = col.iter().map(|s| (s - mean).powi(2)).sum::<f64>() / 4999.0;
            if p == 1 {
                assert!(var <= 1e-6, "labeled node sample variance {var}");
            } else {
                assert!((mean - m).abs() < 4.0 * (v / 5000.0).sqrt(), "{mean} vs {m}");
            }
        }
        assert_eq!(samples, post.sample_posterior(&pts, 5000, 11).unwrap());
    }
}
