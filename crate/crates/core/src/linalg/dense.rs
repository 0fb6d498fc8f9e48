use nalgebra::{DMatrix, SymmetricEigen as NaEigen};

use super::{LinalgError, LinearOperator, SymmetricEigen};

/// Dense matrix behind the operator interface. Mostly a test and fallback vehicle.
#[derive(Debug, Clone)]
pub struct DenseOperator {
    matrix: DMatrix<f64>,
}

impl DenseOperator {
    pub fn new(matrix: DMatrix<f64>) -> Self {
        assert_eq!(matrix.nrows(), matrix.ncols(), "operator must be square");
        Self { matrix }
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }
}

impl LinearOperator for DenseOperator {
    fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    fn apply(&self, v: &[f64], out: &mut [f64]) {
        let n = self.dim();
        for (i, o) in out.iter_mut().enumerate() {
            let mut acc = 0.0;
            for j in 0..n {
                acc += self.matrix[(i, j)] * v[j];
            }
            *o = acc;
        }
    }
}

/// Materializes an operator column by column (`dim` applications).
pub fn to_dense<O: LinearOperator + ?Sized>(op: &O) -> DMatrix<f64> {
    let n = op.dim();
    let mut out = DMatrix::zeros(n, n);
    let mut e = vec![0.0; n];
    let mut col = vec![0.0; n];
    for j in 0..n {
        e[j] = 1.0;
        op.apply(&e, &mut col);
        e[j] = 0.0;
        for i in 0..n {
            out[(i, j)] = col[i];
        }
    }
    out
}

/// `log det` of a symmetric positive definite matrix through its Cholesky factor.
pub fn dense_log_det(matrix: &DMatrix<f64>) -> Result<f64, LinalgError> {
    let sym = (matrix + matrix.transpose()) * 0.5;
    let chol = sym.cholesky().ok_or(LinalgError::NotPositiveDefinite)?;
    let l = chol.l_dirty();
    let mut acc = 0.0;
    for i in 0..l.nrows() {
        let d = l[(i, i)];
        if !(d > 0.0) {
            return Err(LinalgError::NotPositiveDefinite);
        }
        acc += d.ln();
    }
    Ok(2.0 * acc)
}

/// The `count` smallest eigenpairs of a dense symmetric matrix, ascending.
pub fn dense_smallest_eigenpairs(
    matrix: &DMatrix<f64>,
    count: usize,
) -> Result<SymmetricEigen, LinalgError> {
    let n = matrix.nrows();
    if count > n {
        return Err(LinalgError::TooManyEigenpairs {
            requested: count,
            dim: n,
        });
    }
    let sym = (matrix + matrix.transpose()) * 0.5;
    let eig = NaEigen::new(sym);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values: Vec<f64> = order[..count].iter().map(|&i| eig.eigenvalues[i]).collect();
    let mut vectors = DMatrix::zeros(n, count);
    for (c, &i) in order[..count].iter().enumerate() {
        vectors.set_column(c, &eig.eigenvectors.column(i));
    }
    canonicalize_signs(&mut vectors);
    Ok(SymmetricEigen { values, vectors })
}

/// Flips each column so that its largest-magnitude entry is positive.
pub(crate) fn canonicalize_signs(vectors: &mut DMatrix<f64>) {
    for c in 0..vectors.ncols() {
        let mut best = 0.0f64;
        for i in 0..vectors.nrows() {
            let v = vectors[(i, c)];
            if v.abs() > best.abs() + 1e-12 {
                best = v;
            }
        }
        if best < 0.0 {
            for i in 0..vectors.nrows() {
                vectors[(i, c)] = -vectors[(i, c)];
            }
        }
    }
}
