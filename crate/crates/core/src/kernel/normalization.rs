use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::graph::{GraphDerivative, SparseGraph};
use crate::linalg::{conjugate_gradients, CgConfig, LinalgError};

use super::{GraphPrecision, HyperParams};

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct NormConstConfig {
    /// Number of standard basis columns probed; all columns when `>= N`.
    pub probes: usize,
    pub seed: u64,
    pub cg: CgConfig,
}

impl Default for NormConstConfig {
    fn default() -> Self {
        Self {
            probes: 20,
            seed: 0,
            cg: CgConfig::with_tol(1e-10),
        }
    }
}

/// Monte Carlo estimate of the mean prior variance `C = mean_i e_iᵀ P̂⁻¹ e_i`,
/// with `P̂` the precision at `σ² = C = 1`. Keeps the solves so the
/// derivative costs no further CG runs.
#[derive(Debug, Clone)]
pub struct NormConstEstimate {
    pub value: f64,
    pub columns: Vec<usize>,
    solves: Vec<Vec<f64>>,
}

impl NormConstEstimate {
    pub fn compute(graph: &SparseGraph, params: &HyperParams, config: &NormConstConfig) -> Result<Self, LinalgError> {
        let n = graph.len();
        let columns: Vec<usize> = if config.probes >= n {
            (0..n).collect()
        } else {
            let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
            let mut picked = rand::seq::index::sample(&mut rng, n, config.probes.max(1)).into_vec();
            picked.sort_unstable();
            picked
        };
        let op = GraphPrecision::unscaled(graph, params);
        let mut solves = Vec::with_capacity(columns.len());
        let mut total = 0.0;
        let mut e = vec![0.0; n];
        for &i in &columns {
            e[i] = 1.0;
            let sol = conjugate_gradients(&op, &e, &config.cg)?;
            e[i] = 0.0;
            total += sol.x[i];
            solves.push(sol.x);
        }
        Ok(Self {
            value: total / columns.len() as f64,
            columns,
            solves,
        })
    }

    /// `∂C/∂θ` for `θ = (log α, log κ, log σ²)` at fixed probe columns.
    pub fn log_derivatives(&self, graph: &SparseGraph, params: &HyperParams, deriv: &GraphDerivative) -> [f64; 3] {
        let op = GraphPrecision::unscaled(graph, params);
        let mut out = [0.0; 3];
        for u in &self.solves {
            let f = op.derivative_forms(u, u, deriv);
            out[0] -= f[0];
            out[1] -= f[1];
        }
        let m = self.solves.len() as f64;
        [out[0] / m, out[1] / m, 0.0]
    }
}

pub fn norm_const(graph: &SparseGraph, params: &HyperParams, config: &NormConstConfig) -> Result<f64, LinalgError> {
    Ok(NormConstEstimate::compute(graph, params, config)?.value)
}
