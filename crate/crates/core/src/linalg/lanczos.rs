use nalgebra::{DMatrix, SymmetricEigen as NaEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::dense::canonicalize_signs;
use super::{axpy, dot, norm, LinalgError, LinearOperator, SymmetricEigen};

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct LanczosConfig {
    /// First convergence check happens at a subspace of `oversample * count` vectors.
    pub oversample: usize,
    /// Number of starting vectors; a block of at least 2 resolves repeated eigenvalues.
    pub block_size: usize,
    /// Ritz residual bound `|A y - theta y| <= tol * max(1, |theta|)`.
    pub tol: f64,
    /// Largest Krylov subspace before giving up; `None` means the full dimension.
    pub max_subspace: Option<usize>,
    pub seed: u64,
}

impl Default for LanczosConfig {
    fn default() -> Self {
        Self {
            oversample: 3,
            block_size: 2,
            tol: 1e-11,
            max_subspace: None,
            seed: 0,
        }
    }
}

/// Smallest `count` eigenpairs of a symmetric operator by block Lanczos with
/// full reorthogonalization and Rayleigh-Ritz extraction.
///
/// The subspace is grown past `oversample * count` until every requested Ritz
/// pair meets the residual bound or `max_subspace` is reached.
pub fn lanczos_smallest<O: LinearOperator + ?Sized>(
    op: &O,
    count: usize,
    config: &LanczosConfig,
) -> Result<SymmetricEigen, LinalgError> {
    let n = op.dim();
    if count > n {
        return Err(LinalgError::TooManyEigenpairs {
            requested: count,
            dim: n,
        });
    }
    if count == 0 {
        return Ok(SymmetricEigen {
            values: Vec::new(),
            vectors: DMatrix::zeros(n, 0),
        });
    }
    let cap = config.max_subspace.unwrap_or(n).clamp(count, n);
    let block = config.block_size.max(1).min(cap);
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);

    let mut basis: Vec<Vec<f64>> = Vec::with_capacity(cap);
    let mut images: Vec<Vec<f64>> = Vec::with_capacity(cap);
    // upper-triangular columns of the projected matrix: proj[j][i] = q_i' A q_j, i <= j
    let mut proj: Vec<Vec<f64>> = Vec::with_capacity(cap);
    let mut pending: std::collections::VecDeque<Vec<f64>> = (0..block)
        .map(|_| random_vector(n, &mut rng))
        .collect();

    let mut next_check = (config.oversample.max(1) * count).max(count + block).min(cap);
    let mut last_converged = 0;
    loop {
        while basis.len() < next_check {
            let candidate = pending.pop_front().unwrap_or_else(|| random_vector(n, &mut rng));
            let q = orthonormalize(candidate, &basis, &mut rng);
            let mut w = vec![0.0; n];
            op.apply(&q, &mut w);
            let mut col: Vec<f64> = basis.iter().map(|b| dot(b, &w)).collect();
            col.push(dot(&q, &w));
            basis.push(q);
            proj.push(col);
            pending.push_back(w.clone());
            images.push(w);
        }

        let m = basis.len();
        let t = DMatrix::from_fn(m, m, |i, j| {
            let (lo, hi) = if i <= j { (i, j) } else { (j, i) };
            proj[hi][lo]
        });
        let eig = NaEigen::new(t);
        let mut order: Vec<usize> = (0..m).collect();
        order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));

        let mut values = Vec::with_capacity(count);
        let mut vectors = DMatrix::zeros(n, count);
        let mut converged = 0;
        for (c, &k) in order[..count].iter().enumerate() {
            let theta = eig.eigenvalues[k];
            let s = eig.eigenvectors.column(k);
            let mut y = vec![0.0; n];
            let mut ay = vec![0.0; n];
            for j in 0..m {
                axpy(s[j], &basis[j], &mut y);
                axpy(s[j], &images[j], &mut ay);
            }
            let scale = 1.0 / norm(&y);
            let mut res = 0.0;
            for i in 0..n {
                y[i] *= scale;
                ay[i] *= scale;
                res += (ay[i] - theta * y[i]).powi(2);
            }
            if res.sqrt() <= config.tol * theta.abs().max(1.0) {
                converged += 1;
            }
            values.push(theta);
            for i in 0..n {
                vectors[(i, c)] = y[i];
            }
        }
        last_converged = last_converged.max(converged);
        if converged == count {
            canonicalize_signs(&mut vectors);
            return Ok(SymmetricEigen { values, vectors });
        }
        if m >= cap {
            return Err(LinalgError::ConvergenceFailure {
                requested: count,
                converged: last_converged,
                subspace: m,
            });
        }
        next_check = (m + count.max(m / 4)).min(cap);
    }
}

fn random_vector(n: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
    (0..n).map(|_| rng.random_range(-1.0..1.0)).collect()
}

/// Two passes of classical Gram-Schmidt against `basis`, then normalization.
/// A candidate that collapses into the span is replaced by a fresh random vector.
fn orthonormalize(mut v: Vec<f64>, basis: &[Vec<f64>], rng: &mut ChaCha8Rng) -> Vec<f64> {
    let n = v.len();
    for _attempt in 0..8 {
        let before = norm(&v);
        for _ in 0..2 {
            for b in basis {
                let c = dot(b, &v);
                axpy(-c, b, &mut v);
            }
        }
        let after = norm(&v);
        if after > 1e-10 * before && after > 0.0 {
            return v.into_iter().map(|x| x / after).collect();
        }
        v = random_vector(n, rng);
    }
    panic!("could not extend an orthonormal basis of size {} in dimension {n}", basis.len());
}
