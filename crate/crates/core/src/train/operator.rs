use std::sync::Mutex;

use crate::graph::{GraphDerivative, SparseGraph};
use crate::kernel::{GraphPrecision, HyperParams, NormConstConfig, NormConstEstimate};
use crate::linalg::{conjugate_gradients, dot, CgConfig, LinalgError, LinearOperator};

use super::TrainError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PrecisionMode {
    /// Every node labeled, no observation noise: the operator is `P`.
    SupervisedNoiseless,
    /// Labeled subset `Z`, no noise: the Schur complement `P_ZZ - P_ZR P_RR⁻¹ P_RZ`.
    SemiSupervisedNoiseless,
    /// Two-term expansion `S - σ_ε² S²` of the noisy precision around the
    /// noiseless one `S` (full or Schur).
    Noisy,
}

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct PrecisionOptions {
    /// Tolerance of the inner `P_RR` solves in the Schur complement.
    pub inner_cg: CgConfig,
    /// Kernel normalization; `None` keeps `C = 1`.
    pub normalization: Option<NormConstConfig>,
}

impl Default for PrecisionOptions {
    fn default() -> Self {
        Self {
            inner_cg: CgConfig::with_tol(1e-10),
            normalization: None,
        }
    }
}

/// Precision of the labeled observations, as a matrix-free operator over the
/// labeled indices (in the order given at construction).
pub struct PrecisionOp<'g> {
    graph: &'g SparseGraph,
    params: HyperParams,
    full: GraphPrecision<'g>,
    deriv: GraphDerivative,
    norm: Option<NormConstEstimate>,
    labeled: Vec<usize>,
    rest: Vec<usize>,
    noisy: bool,
    inner_cg: CgConfig,
    failure: Mutex<Option<LinalgError>>,
}

impl<'g> PrecisionOp<'g> {
    /// `graph` must be built at `params.alpha`.
    pub fn new(
        graph: &'g SparseGraph,
        params: &HyperParams,
        labeled: &[usize],
        noisy: bool,
        options: &PrecisionOptions,
    ) -> Result<Self, TrainError> {
        params.validate()?;
        let n = graph.len();
        let mut is_labeled = vec![false; n];
        for &i in labeled {
            if i >= n || std::mem::replace(&mut is_labeled[i], true) {
                return Err(TrainError::InvalidConfig(format!("bad labeled index {i}")));
            }
        }
        if labeled.is_empty() {
            return Err(TrainError::NoLabels);
        }
        let rest = (0..n).filter(|&i| !is_labeled[i]).collect();
        let norm = match &options.normalization {
            Some(cfg) => Some(NormConstEstimate::compute(graph, params, cfg)?),
            None => None,
        };
        let c = norm.as_ref().map_or(1.0, |e| e.value);
        Ok(Self {
            graph,
            params: *params,
            full: GraphPrecision::new(graph, params, c),
            deriv: graph.log_alpha_derivative(),
            norm,
            labeled: labeled.to_vec(),
            rest,
            noisy,
            inner_cg: options.inner_cg,
            failure: Mutex::new(None),
        })
    }

    pub fn mode(&self) -> PrecisionMode {
        if self.noisy {
            PrecisionMode::Noisy
        } else if self.rest.is_empty() {
            PrecisionMode::SupervisedNoiseless
        } else {
            PrecisionMode::SemiSupervisedNoiseless
        }
    }

    pub fn params(&self) -> &HyperParams {
        &self.params
    }

    pub fn graph(&self) -> &'g SparseGraph {
        self.graph
    }

    pub fn norm_const(&self) -> f64 {
        self.norm.as_ref().map_or(1.0, |e| e.value)
    }

    pub fn full_precision(&self) -> &GraphPrecision<'g> {
        &self.full
    }

    pub fn labeled(&self) -> &[usize] {
        &self.labeled
    }

    /// Returns (and clears) the first inner-solve failure since the last call.
    pub fn take_failure(&self) -> Option<LinalgError> {
        self.failure.lock().unwrap().take()
    }

    fn record(&self, err: LinalgError) {
        let mut slot = self.failure.lock().unwrap();
        if slot.is_none() {
            *slot = Some(err);
        }
    }

    fn embed(&self, v: &[f64]) -> Vec<f64> {
        let mut x = vec![0.0; self.graph.len()];
        for (&i, &vi) in self.labeled.iter().zip(v) {
            x[i] = vi;
        }
        x
    }

    /// The full-size vector `u` with `u_Z = v` and `(P u)_R = 0`, so that
    /// `(P u)_Z` is the Schur complement applied to `v`.
    pub fn lift(&self, v: &[f64]) -> Vec<f64> {
        let mut u = self.embed(v);
        if self.rest.is_empty() {
            return u;
        }
        let pu = self.full.apply_vec(&u);
        let rhs: Vec<f64> = self.rest.iter().map(|&i| -pu[i]).collect();
        let block = Restricted { full: &self.full, rows: &self.rest, n: self.graph.len() };
        let x = match conjugate_gradients(&block, &rhs, &self.inner_cg) {
            Ok(sol) => sol.x,
            Err(LinalgError::MaxItersExceeded { best, iterations, residual, tol }) => {
                self.record(LinalgError::MaxItersExceeded { best: Vec::new(), iterations, residual, tol });
                best
            }
            Err(err) => {
                self.record(err);
                vec![0.0; rhs.len()]
            }
        };
        for (&i, xi) in self.rest.iter().zip(x) {
            u[i] = xi;
        }
        u
    }

    fn base_from_lift(&self, u: &[f64]) -> Vec<f64> {
        let pu = self.full.apply_vec(u);
        self.labeled.iter().map(|&i| pu[i]).collect()
    }

    /// The noiseless labeled precision `S` (full or Schur).
    pub fn apply_base(&self, v: &[f64]) -> Vec<f64> {
        self.base_from_lift(&self.lift(v))
    }

    /// `uᵀ (∂P/∂θ) w` for full-size `u, w`, including the normalization term.
    fn full_forms(&self, u: &[f64], w: &[f64]) -> [f64; 3] {
        let mut f = self.full.derivative_forms(u, w, &self.deriv);
        if let Some(est) = &self.norm {
            let dc = est.log_derivatives(self.graph, &self.params, &self.deriv);
            let upw = -f[2];
            f[0] += dc[0] / est.value * upw;
            f[1] += dc[1] / est.value * upw;
        }
        f
    }

    /// `aᵀ (∂P̃/∂θ) b` over `θ = (log α, log κ, log σ², log σ_ε²)`.
    pub fn derivative_forms(&self, a: &[f64], b: &[f64]) -> [f64; 4] {
        let la = self.lift(a);
        let lb = self.lift(b);
        let base = self.full_forms(&la, &lb);
        if !self.noisy {
            return [base[0], base[1], base[2], 0.0];
        }
        let s2 = self.params.noise2;
        let sa = self.base_from_lift(&la);
        let sb = self.base_from_lift(&lb);
        let a_sb = self.full_forms(&la, &self.lift(&sb));
        let sa_b = self.full_forms(&self.lift(&sa), &lb);
        let mut out = [0.0; 4];
        for c in 0..3 {
            out[c] = base[c] - s2 * (a_sb[c] + sa_b[c]);
        }
        out[3] = -s2 * dot(&sa, &sb);
        out
    }
}

impl LinearOperator for PrecisionOp<'_> {
    fn dim(&self) -> usize {
        self.labeled.len()
    }

    fn apply(&self, v: &[f64], out: &mut [f64]) {
        let s = self.apply_base(v);
        if self.noisy {
            let ss = self.apply_base(&s);
            for i in 0..s.len() {
                out[i] = s[i] - self.params.noise2 * ss[i];
            }
        } else {
            out.copy_from_slice(&s);
        }
    }
}

/// Principal block `P_RR` of the full precision.
struct Restricted<'a, 'g> {
    full: &'a GraphPrecision<'g>,
    rows: &'a [usize],
    n: usize,
}

impl LinearOperator for Restricted<'_, '_> {
    fn dim(&self) -> usize {
        self.rows.len()
    }

    fn apply(&self, v: &[f64], out: &mut [f64]) {
        let mut x = vec![0.0; self.n];
        for (&i, &vi) in self.rows.iter().zip(v) {
            x[i] = vi;
        }
        let px = self.full.apply_vec(&x);
        for (o, &i) in out.iter_mut().zip(self.rows) {
            *o = px[i];
        }
    }
}
