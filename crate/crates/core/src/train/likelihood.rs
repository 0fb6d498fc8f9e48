use rayon::prelude::*;

use crate::linalg::{
    conjugate_gradients, dense_log_det, dot, hutchinson_probe, mix_seed, stochastic_log_det, to_dense, CgConfig,
    LinalgError, LinearOperator, SlqConfig,
};

use super::{PrecisionOp, TrainError};

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LogDetMethod {
    /// Assemble the labeled precision with `n` matvecs and factor it.
    Dense,
    Slq(SlqConfig),
    /// Dense up to `dense_limit` labeled points, stochastic Lanczos quadrature beyond.
    Auto { dense_limit: usize, slq: SlqConfig },
}

impl Default for LogDetMethod {
    fn default() -> Self {
        LogDetMethod::Auto {
            dense_limit: 2000,
            slq: SlqConfig::default(),
        }
    }
}

/// `log det P̃ − yᵀ P̃ y`, twice the Gaussian log-likelihood up to a constant.
pub fn log_likelihood(op: &PrecisionOp<'_>, y: &[f64], method: &LogDetMethod) -> Result<f64, TrainError> {
    check_len(op, y)?;
    let n = op.dim();
    let log_det = match method {
        LogDetMethod::Dense => dense_log_det(&to_dense(op))?,
        LogDetMethod::Slq(cfg) => stochastic_log_det(op, cfg)?,
        LogDetMethod::Auto { dense_limit, slq } => {
            if n <= *dense_limit {
                dense_log_det(&to_dense(op))?
            } else {
                stochastic_log_det(op, slq)?
            }
        }
    };
    let quad = dot(y, &op.apply_vec(y));
    if let Some(err) = op.take_failure() {
        return Err(err.into());
    }
    Ok(log_det - quad)
}

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TraceProbes {
    /// Rademacher probes; the trace term is unbiased but noisy.
    Hutchinson { count: usize, seed: u64 },
    /// Every standard basis vector; the trace term is exact.
    Exhaustive,
}

/// Gradient of [`log_likelihood`] with respect to
/// `(log α, log κ, log σ², log σ_ε²)`.
///
/// The trace `tr(P̃⁻¹ ∂P̃)` is estimated as `(P̃⁻¹z)ᵀ(∂P̃ z)` per probe with one
/// CG solve each; the data term `yᵀ ∂P̃ y` is exact. The last coordinate is 0
/// unless the operator is in noisy mode.
pub fn grad_log_likelihood(
    op: &PrecisionOp<'_>,
    y: &[f64],
    probes: &TraceProbes,
    cg: &CgConfig,
) -> Result<[f64; 4], TrainError> {
    check_len(op, y)?;
    let n = op.dim();
    let vectors: Vec<Vec<f64>> = match probes {
        TraceProbes::Exhaustive => (0..n)
            .map(|i| {
                let mut e = vec![0.0; n];
                e[i] = 1.0;
                e
            })
            .collect(),
        TraceProbes::Hutchinson { count, seed } => (0..(*count).max(1))
            .map(|p| hutchinson_probe(n, mix_seed(*seed, &[p as u64])))
            .collect(),
    };
    let per_probe: Vec<Result<[f64; 4], LinalgError>> = vectors
        .par_iter()
        .map(|z| {
            let sol = conjugate_gradients(op, z, cg)?;
            Ok(op.derivative_forms(&sol.x, z))
        })
        .collect();
    let mut trace = [0.0; 4];
    for r in per_probe {
        let f = r?;
        for c in 0..4 {
            trace[c] += f[c];
        }
    }
    let scale = match probes {
        TraceProbes::Exhaustive => 1.0,
        TraceProbes::Hutchinson { .. } => 1.0 / vectors.len() as f64,
    };
    let data = op.derivative_forms(y, y);
    if let Some(err) = op.take_failure() {
        return Err(err.into());
    }
    let mut grad = [0.0; 4];
    for c in 0..4 {
        grad[c] = scale * trace[c] - data[c];
    }
    Ok(grad)
}

fn check_len(op: &PrecisionOp<'_>, y: &[f64]) -> Result<(), TrainError> {
    if y.len() != op.dim() {
        return Err(LinalgError::DimensionMismatch { expected: op.dim(), got: y.len() }.into());
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{EigenConfig, EigenSolver, GraphPattern, KnnIndex, PointSet};
    use crate::kernel::{HyperParams, SpectralKernel};
    use crate::linalg::finite_diff_gradient;
    use crate::train::PrecisionOptions;
    use nalgebra::{DMatrix, DVector};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::sync::Arc;

    fn pattern(n: usize, seed: u64) -> Arc<GraphPattern> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let data = (0..2 * n).map(|_| rng.random_range(-1.0..1.0)).collect();
        let index = KnnIndex::new(Arc::new(PointSet::new(data, 2).unwrap()), 4).unwrap();
        Arc::new(GraphPattern::from_index(&index))
    }

    fn opts() -> PrecisionOptions {
        PrecisionOptions { inner_cg: CgConfig::with_tol(1e-13), normalization: None }
    }

    #[test]
    fn dense_spectral_oracle() {
        let g = pattern(30, 1).with_bandwidth(0.35).unwrap();
        let p = HyperParams { alpha: 0.35, kappa: 0.7, sigma2: 0.9, nu: 1, ..Default::default() };
        let all: Vec<usize> = (0..30).collect();
        let op = PrecisionOp::new(&g, &p, &all, false, &opts()).unwrap();
        let y: Vec<f64> = (0..30).map(|i| (i as f64 * 0.3).sin()).collect();
        let got = log_likelihood(&op, &y, &LogDetMethod::Dense).unwrap();
        let basis = g.eigenbasis(30, &EigenConfig { solver: EigenSolver::Dense, ..Default::default() }).unwrap();
        let k = SpectralKernel::new(basis, p, 1.0).gram();
        let chol = k.clone().cholesky().unwrap();
        let log_det_k: f64 = 2.0 * chol.l().diagonal().iter().map(|v| v.ln()).sum::<f64>();
        let yv = DVector::from_vec(y);
        let want = -log_det_k - yv.dot(&chol.solve(&yv));
        assert!((got - want).abs() < 1e-6 * want.abs(), "{got} vs {want}");
    }

    #[test]
    fn slq_and_dense_agree() {
        let g = pattern(40, 2).with_bandwidth(0.35).unwrap();
        let p = HyperParams { alpha: 0.35, kappa: 1.5, sigma2: 1.0, nu: 1, ..Default::default() };
        let all: Vec<usize> = (0..40).collect();
        let op = PrecisionOp::new(&g, &p, &all, false, &opts()).unwrap();
        let y = vec![0.0; 40];
        let dense = log_likelihood(&op, &y, &LogDetMethod::Dense).unwrap();
        let slq = log_likelihood(&op, &y, &LogDetMethod::Slq(SlqConfig { probes: 200, steps: 40, seed: 1 })).unwrap();
        assert!((dense - slq).abs() < 0.05 * dense.abs().max(1.0), "{dense} vs {slq}");
    }

    #[test]
    fn sigma_homogeneity_of_data_term() {
        let g = pattern(20, 3).with_bandwidth(0.4).unwrap();
        let p = HyperParams { alpha: 0.4, kappa: 0.9, sigma2: 1.3, nu: 2, ..Default::default() };
        let all: Vec<usize> = (0..20).collect();
        let op = PrecisionOp::new(&g, &p, &all, false, &opts()).unwrap();
        let y: Vec<f64> = (0..20).map(|i| (i as f64).cos()).collect();
        let d = op.derivative_forms(&y, &y);
        let quad = dot(&y, &op.apply_vec(&y));
        assert!((d[2] + quad).abs() < 1e-12 * quad.abs());
    }

    fn check_gradient(n: usize, n_labeled: usize, nu: u32, noise2: f64) {
        let pat = pattern(n, 40 + n as u64);
        let labeled: Vec<usize> = (0..n).step_by(n / n_labeled).take(n_labeled).collect();
        let y: Vec<f64> = labeled.iter().map(|&i| (0.7 * i as f64).sin()).collect();
        let noisy = noise2 > 0.0;
        let base = HyperParams { alpha: 0.35, kappa: 0.9, sigma2: 1.1, noise2, nu, ..Default::default() };
        let objective = |theta: &[f64]| {
            let q = base.with_log_vector(&[theta[0], theta[1], theta[2], theta[3]]);
            let g = pat.with_bandwidth(q.alpha).unwrap();
            let op = PrecisionOp::new(&g, &q, &labeled, noisy, &opts()).unwrap();
            log_likelihood(&op, &y, &LogDetMethod::Dense).unwrap()
        };
        let g = pat.with_bandwidth(base.alpha).unwrap();
        let op = PrecisionOp::new(&g, &base, &labeled, noisy, &opts()).unwrap();
        let grad = grad_log_likelihood(&op, &y, &TraceProbes::Exhaustive, &CgConfig::with_tol(1e-13)).unwrap();
        let fd = finite_diff_gradient(objective, &base.log_vector(), 1e-5);
        let coords = if noisy { 4 } else { 3 };
        for c in 0..coords {
            let rel = (grad[c] - fd[c]).abs() / fd[c].abs().max(1e-8);
            assert!(rel < 1e-4, "n={n} labeled={n_labeled} nu={nu} noise={noise2} coord {c}: {} vs {}", grad[c], fd[c]);
        }
    }

    #[test]
    fn gradient_supervised() {
        check_gradient(24, 24, 1, 0.0);
        check_gradient(24, 24, 2, 0.0);
    }

    #[test]
    fn gradient_schur() {
        check_gradient(30, 10, 1, 0.0);
        check_gradient(30, 10, 2, 0.0);
    }

    #[test]
    fn gradient_taylor() {
        check_gradient(24, 24, 1, 1e-3);
        check_gradient(30, 10, 2, 1e-3);
    }

    #[test]
    fn hutchinson_trace_is_unbiased() {
        let g = pattern(30, 9).with_bandwidth(0.35).unwrap();
        let p = HyperParams { alpha: 0.35, kappa: 0.9, sigma2: 1.0, nu: 1, ..Default::default() };
        let all: Vec<usize> = (0..30).collect();
        let op = PrecisionOp::new(&g, &p, &all, false, &opts()).unwrap();
        let y = vec![0.0; 30];
        let cg = CgConfig::with_tol(1e-12);
        let exact = grad_log_likelihood(&op, &y, &TraceProbes::Exhaustive, &cg).unwrap();
        let count = 2000;
        let samples: Vec<f64> = (0..count)
            .map(|s| grad_log_likelihood(&op, &y, &TraceProbes::Hutchinson { count: 1, seed: s }, &cg).unwrap()[0])
            .collect();
        let mean = samples.iter().sum::<f64>() / count as f64;
        let var = samples.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (count - 1) as f64;
        let se = (var / count as f64).sqrt();
        assert!((mean - exact[0]).abs() < 3.0 * se, "{mean} vs {} (se {se})", exact[0]);
    }

    #[test]
    fn identity_like_precision() {
        // P = diag(2, 2) realised as a graph of two far-apart nodes.
        let pts = Arc::new(PointSet::new(vec![0.0, 1000.0], 1).unwrap());
        let index = KnnIndex::new(pts, 1).unwrap();
        let g = Arc::new(GraphPattern::from_index(&index)).with_bandwidth(1.0).unwrap();
        assert_eq!(g.deg(), &[1.0, 1.0]);
        let p = HyperParams { alpha: 1.0, kappa: 1.0, sigma2: 1.0, nu: 1, ..Default::default() };
        let op = PrecisionOp::new(&g, &p, &[0, 1], false, &opts()).unwrap();
        assert_eq!(to_dense(&op), DMatrix::from_diagonal_element(2, 2, 2.0));
        let l = log_likelihood(&op, &[0.0, 0.0], &LogDetMethod::Dense).unwrap();
        assert!((l - 2.0 * 2f64.ln()).abs() < 1e-14);
    }
}
