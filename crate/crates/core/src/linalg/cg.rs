use super::{axpy, dot, norm, LinalgError, LinearOperator};

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct CgConfig {
    /// Target relative residual `|Ax - b| / |b|`.
    pub tol: f64,
    /// Iteration cap; `None` means `10 * dim`.
    pub max_iters: Option<usize>,
}

impl Default for CgConfig {
    fn default() -> Self {
        Self {
            tol: 1e-8,
            max_iters: None,
        }
    }
}

impl CgConfig {
    pub fn with_tol(tol: f64) -> Self {
        Self {
            tol,
            max_iters: None,
        }
    }
}

#[derive(Debug, Clone)]
pub struct CgSolution {
    pub x: Vec<f64>,
    pub iterations: usize,
    pub relative_residual: f64,
}

/// Solves `op x = rhs` for a symmetric positive definite `op`, starting from zero.
pub fn conjugate_gradients<O: LinearOperator + ?Sized>(
    op: &O,
    rhs: &[f64],
    config: &CgConfig,
) -> Result<CgSolution, LinalgError> {
    conjugate_gradients_observed(op, rhs, config, |_| {})
}

/// Same as [`conjugate_gradients`], calling `observe` with every iterate.
pub fn conjugate_gradients_observed<O, F>(
    op: &O,
    rhs: &[f64],
    config: &CgConfig,
    mut observe: F,
) -> Result<CgSolution, LinalgError>
where
    O: LinearOperator + ?Sized,
    F: FnMut(&[f64]),
{
    let n = op.dim();
    if rhs.len() != n {
        return Err(LinalgError::DimensionMismatch {
            expected: n,
            got: rhs.len(),
        });
    }
    let max_iters = config.max_iters.unwrap_or(10 * n.max(1));
    let mut x = vec![0.0; n];
    let b_norm = norm(rhs);
    if b_norm == 0.0 {
        return Ok(CgSolution {
            x,
            iterations: 0,
            relative_residual: 0.0,
        });
    }
    let mut r = rhs.to_vec();
    let mut p = r.clone();
    let mut ap = vec![0.0; n];
    let mut rr = dot(&r, &r);
    let mut rel = rr.sqrt() / b_norm;
    for it in 0..max_iters {
        if rel <= config.tol {
            return Ok(CgSolution {
                x,
                iterations: it,
                relative_residual: rel,
            });
        }
        op.apply(&p, &mut ap);
        let curvature = dot(&p, &ap);
        if !(curvature > 0.0) {
            return Err(LinalgError::BreakdownDetected {
                iteration: it,
                curvature,
            });
        }
        let step = rr / curvature;
        axpy(step, &p, &mut x);
        axpy(-step, &ap, &mut r);
        observe(&x);
        let rr_next = dot(&r, &r);
        rel = rr_next.sqrt() / b_norm;
        let beta = rr_next / rr;
        rr = rr_next;
        for (pi, ri) in p.iter_mut().zip(&r) {
            *pi = ri + beta * *pi;
        }
    }
    if rel <= config.tol {
        return Ok(CgSolution {
            x,
            iterations: max_iters,
            relative_residual: rel,
        });
    }
    Err(LinalgError::MaxItersExceeded {
        iterations: max_iters,
        residual: rel,
        tol: config.tol,
        best: x,
    })
}
