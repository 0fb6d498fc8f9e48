use crate::graph::{GraphDerivative, SparseGraph};
use crate::linalg::{dot, LinearOperator};

use super::HyperParams;

/// Sparse precision `P = (C/σ²) D (cI + Δ_rw)^ν` with `c = 2ν/κ²`.
///
/// The matvec applies `cI + Δ_rw` ν times and the degree scaling last, so it
/// costs ν sparse products. For derivatives the same matrix is written as
/// `(C/σ²) G (D⁻¹G)^{ν-1}` with the symmetric factor `G = (c+1)D - A`.
#[derive(Debug, Clone, Copy)]
pub struct GraphPrecision<'g> {
    graph: &'g SparseGraph,
    nu: u32,
    shift: f64,
    scale: f64,
}

/// `aᵀ (∂P/∂θ) b` for `θ = (log α, log κ, log σ²)`.
pub type PrecisionForms = [f64; 3];

impl<'g> GraphPrecision<'g> {
    pub fn new(graph: &'g SparseGraph, params: &HyperParams, norm_const: f64) -> Self {
        Self {
            graph,
            nu: params.nu,
            shift: params.shift(),
            scale: norm_const / params.sigma2,
        }
    }

    /// `D (cI + Δ_rw)^ν` with `σ² = C = 1`.
    pub fn unscaled(graph: &'g SparseGraph, params: &HyperParams) -> Self {
        Self {
            graph,
            nu: params.nu,
            shift: params.shift(),
            scale: 1.0,
        }
    }

    pub fn graph(&self) -> &'g SparseGraph {
        self.graph
    }

    pub fn nu(&self) -> u32 {
        self.nu
    }

    pub fn shift(&self) -> f64 {
        self.shift
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    fn apply_g(&self, v: &[f64], out: &mut [f64]) {
        let d = self.graph.deg();
        self.graph.adj().matvec(v, out);
        for i in 0..v.len() {
            out[i] = (self.shift + 1.0) * d[i] * v[i] - out[i];
        }
    }

    fn apply_h(&self, v: &[f64], out: &mut [f64]) {
        for ((o, x), d) in out.iter_mut().zip(v).zip(self.graph.deg()) {
            *o = x / d;
        }
    }

    fn apply_factor(&self, k: usize, v: &[f64], out: &mut [f64]) {
        if k % 2 == 0 {
            self.apply_g(v, out)
        } else {
            self.apply_h(v, out)
        }
    }

    /// Bilinear forms of the log-parameter derivatives. `deriv` must be the
    /// log-bandwidth derivative of the same graph.
    pub fn derivative_forms(&self, a: &[f64], b: &[f64], deriv: &GraphDerivative) -> PrecisionForms {
        let n = a.len();
        let m = 2 * self.nu as usize - 1;
        // right[k] = F_{k+1} ... F_{m-1} b   (factors indexed from 0)
        let mut right = vec![b.to_vec(); m];
        for k in (1..m).rev() {
            let mut next = vec![0.0; n];
            self.apply_factor(k, &right[k], &mut next);
            right[k - 1] = next;
        }
        let d = self.graph.deg();
        let c = self.shift;
        let mut left = a.to_vec();
        let mut d_alpha = 0.0;
        let mut d_kappa = 0.0;
        let mut pb = vec![0.0; n];
        for k in 0..m {
            let r = &right[k];
            if k % 2 == 0 {
                let mut diag_alpha = 0.0;
                let mut diag_kappa = 0.0;
                for i in 0..n {
                    let lr = left[i] * r[i];
                    diag_alpha += (c + 1.0) * deriv.d_deg[i] * lr;
                    diag_kappa += d[i] * lr;
                }
                d_alpha += diag_alpha - sparse_form(&deriv.d_adj, &left, r);
                d_kappa += -2.0 * c * diag_kappa;
            } else {
                for i in 0..n {
                    d_alpha -= left[i] * deriv.d_deg[i] / (d[i] * d[i]) * r[i];
                }
            }
            if k == 0 {
                self.apply_g(r, &mut pb);
            }
            if k + 1 < m {
                let mut next = vec![0.0; n];
                self.apply_factor(k, &left, &mut next);
                left = next;
            }
        }
        let s = self.scale;
        [s * d_alpha, s * d_kappa, -s * dot(a, &pb)]
    }
}

/// `aᵀ M b` for a sparse `M`.
pub(crate) fn sparse_form(m: &crate::graph::CsrMatrix, a: &[f64], b: &[f64]) -> f64 {
    (0..m.dim())
        .map(|i| {
            let (cols, vals) = m.row(i);
            a[i] * cols.iter().zip(vals).map(|(&j, &v)| v * b[j]).sum::<f64>()
        })
        .sum()
}

impl LinearOperator for GraphPrecision<'_> {
    fn dim(&self) -> usize {
        self.graph.len()
    }

    fn apply(&self, v: &[f64], out: &mut [f64]) {
        let d = self.graph.deg();
        let mut u = v.to_vec();
        let mut av = vec![0.0; u.len()];
        for _ in 0..self.nu {
            self.graph.adj().matvec(&u, &mut av);
            for i in 0..u.len() {
                u[i] = (self.shift + 1.0) * u[i] - av[i] / d[i];
            }
        }
        for i in 0..u.len() {
            out[i] = self.scale * d[i] * u[i];
        }
    }
}

/// `P v` for the graph precision at the given hyperparameters.
pub fn precision_matvec(graph: &SparseGraph, params: &HyperParams, norm_const: f64, v: &[f64]) -> Vec<f64> {
    GraphPrecision::new(graph, params, norm_const).apply_vec(v)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{EigenConfig, EigenSolver, GraphPattern, KnnIndex, PointSet};
    use crate::kernel::SpectralKernel;
    use crate::linalg::to_dense;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::sync::Arc;

    fn pattern(n: usize, seed: u64) -> Arc<GraphPattern> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let data = (0..2 * n).map(|_| rng.random_range(-1.0..1.0)).collect();
        let index = KnnIndex::new(Arc::new(PointSet::new(data, 2).unwrap()), 4).unwrap();
        Arc::new(GraphPattern::from_index(&index))
    }

    fn params(nu: u32) -> HyperParams {
        HyperParams { alpha: 0.3, kappa: 0.9, sigma2: 1.7, nu, ..Default::default() }
    }

    #[test]
    fn zero_maps_to_zero() {
        let g = pattern(15, 1).with_bandwidth(0.3).unwrap();
        assert!(precision_matvec(&g, &params(2), 1.0, &[0.0; 15]).iter().all(|&v| v == 0.0));
    }

    #[test]
    fn single_node_is_scalar() {
        let pts = Arc::new(PointSet::new(vec![0.0], 1).unwrap());
        let search = Arc::new(KnnIndex::new_unchecked(pts, 0));
        let g = Arc::new(GraphPattern::from_neighbor_lists(search, 0, vec![vec![]]))
            .with_bandwidth(1.0)
            .unwrap();
        let p = HyperParams { kappa: 0.5, sigma2: 2.0, nu: 1, ..Default::default() };
        let c = 1.5;
        let got = precision_matvec(&g, &p, c, &[1.0])[0];
        let want = c / 2.0 * g.deg()[0] * (2.0 / 0.25);
        assert!((got - want).abs() < 1e-12);
    }

    #[test]
    fn inverse_of_full_spectrum_kernel() {
        for nu in 1..=3 {
            let g = pattern(40, 2).with_bandwidth(0.35).unwrap();
            let p = params(nu);
            let basis = g
                .eigenbasis(40, &EigenConfig { solver: EigenSolver::Dense, ..Default::default() })
                .unwrap();
            let k = SpectralKernel::new(basis, p, 0.8).gram();
            let prec = to_dense(&GraphPrecision::new(&g, &p, 0.8));
            let dev = (k * prec - nalgebra::DMatrix::identity(40, 40)).abs().max();
            assert!(dev < 1e-6, "nu {nu}: {dev}");
        }
    }

    #[test]
    fn factorized_form_is_symmetric() {
        let g = pattern(30, 3).with_bandwidth(0.3).unwrap();
        let prec = to_dense(&GraphPrecision::new(&g, &params(3), 1.0));
        let scale = prec.abs().max();
        assert!((&prec - prec.transpose()).abs().max() < 1e-12 * scale);
    }

    #[test]
    fn derivative_forms_match_finite_differences() {
        let pat = pattern(25, 4);
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let a: Vec<f64> = (0..25).map(|_| rng.random_range(-1.0..1.0)).collect();
        let b: Vec<f64> = (0..25).map(|_| rng.random_range(-1.0..1.0)).collect();
        for nu in 1..=3 {
            let p = params(nu);
            let form = |q: &HyperParams| {
                let g = pat.with_bandwidth(q.alpha).unwrap();
                dot(&a, &precision_matvec(&g, q, 1.0, &b))
            };
            let g = pat.with_bandwidth(p.alpha).unwrap();
            let forms = GraphPrecision::new(&g, &p, 1.0).derivative_forms(&a, &b, &g.log_alpha_derivative());
            let theta = p.log_vector();
            let h = 1e-5;
            for c in 0..3 {
                let mut up = theta;
                let mut down = theta;
                up[c] += h;
                down[c] -= h;
                let fd = (form(&p.with_log_vector(&up)) - form(&p.with_log_vector(&down))) / (2.0 * h);
                assert!((fd - forms[c]).abs() < 1e-6 * fd.abs().max(1.0), "nu {nu} coord {c}: {fd} vs {}", forms[c]);
            }
        }
    }
}
