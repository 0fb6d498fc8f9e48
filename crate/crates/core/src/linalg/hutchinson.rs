use nalgebra::{DMatrix, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{axpy, dot, norm, LinalgError, LinearOperator};

/// Rademacher vector of length `dim`, reproducible per `(dim, seed)`.
pub fn hutchinson_probe(dim: usize, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..dim)
        .map(|_| if rng.random::<bool>() { 1.0 } else { -1.0 })
        .collect()
}

/// Derives a child seed from a parent seed and a stream of indices (splitmix64 steps).
pub fn mix_seed(seed: u64, parts: &[u64]) -> u64 {
    let mut state = seed ^ 0x9E37_79B9_7F4A_7C15;
    for &p in parts {
        state = state.wrapping_add(p.wrapping_mul(0xBF58_476D_1CE4_E5B9));
        let mut z = state.wrapping_add(0x9E37_79B9_7F4A_7C15);
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        state = z ^ (z >> 31);
    }
    state
}

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct SlqConfig {
    pub probes: usize,
    /// Lanczos steps per probe (capped at the operator dimension).
    pub steps: usize,
    pub seed: u64,
}

impl Default for SlqConfig {
    fn default() -> Self {
        Self {
            probes: 30,
            steps: 50,
            seed: 0,
        }
    }
}

/// Stochastic Lanczos quadrature estimate of `log det(op)` for SPD `op`.
///
/// Unbiased only in the limit of exact quadrature; variance shrinks as `1/probes`.
pub fn stochastic_log_det<O: LinearOperator + ?Sized>(
    op: &O,
    config: &SlqConfig,
) -> Result<f64, LinalgError> {
    let n = op.dim();
    let steps = config.steps.clamp(1, n.max(1));
    let mut total = 0.0;
    for p in 0..config.probes.max(1) {
        let z = hutchinson_probe(n, mix_seed(config.seed, &[p as u64]));
        let (alphas, betas) = lanczos_tridiagonal(op, &z, steps);
        let m = alphas.len();
        let t = DMatrix::from_fn(m, m, |i, j| {
            if i == j {
                alphas[i]
            } else if i + 1 == j {
                betas[i]
            } else if j + 1 == i {
                betas[j]
            } else {
                0.0
            }
        });
        let eig = SymmetricEigen::new(t);
        let mut quad = 0.0;
        for k in 0..m {
            let theta = eig.eigenvalues[k];
            if !(theta > 0.0) {
                return Err(LinalgError::NotPositiveDefinite);
            }
            let w = eig.eigenvectors[(0, k)];
            quad += w * w * theta.ln();
        }
        total += dot(&z, &z) * quad;
    }
    Ok(total / config.probes.max(1) as f64)
}

/// Plain Lanczos with full reorthogonalization from `start`; returns the
/// tridiagonal coefficients (diagonal, off-diagonal).
fn lanczos_tridiagonal<O: LinearOperator + ?Sized>(
    op: &O,
    start: &[f64],
    steps: usize,
) -> (Vec<f64>, Vec<f64>) {
    let n = op.dim();
    let mut basis: Vec<Vec<f64>> = Vec::with_capacity(steps);
    let mut q: Vec<f64> = start.iter().map(|x| x / norm(start)).collect();
    let mut alphas = Vec::with_capacity(steps);
    let mut betas = Vec::with_capacity(steps);
    let mut w = vec![0.0; n];
    for k in 0..steps {
        op.apply(&q, &mut w);
        let a = dot(&q, &w);
        alphas.push(a);
        basis.push(q.clone());
        for _ in 0..2 {
            for b in &basis {
                let c = dot(b, &w);
                axpy(-c, b, &mut w);
            }
        }
        let beta = norm(&w);
        if k + 1 == steps || beta < 1e-12 * a.abs().max(1.0) {
            break;
        }
        betas.push(beta);
        q = w.iter().map(|x| x / beta).collect();
    }
    (alphas, betas)
}
