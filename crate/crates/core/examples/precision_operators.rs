//! The sparse precision matrix of the graph Matérn kernel, its Schur
//! complement over a labeled subset and the two-term noise expansion,
//! each compared with the dense kernel it stands for.
//!
//! cargo run --release --example precision_operators

use std::sync::Arc;

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use imgp::graph::{build_graph, EigenConfig, EigenSolver, KnnIndex, PointSet};
use imgp::kernel::{GraphPrecision, HyperParams, SpectralKernel};
use imgp::linalg::{to_dense, CgConfig};
use imgp::train::{PrecisionOp, PrecisionOptions};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let n = 60;
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let data = (0..2 * n).map(|_| rng.random_range(-1.0..1.0)).collect();
    let index = KnnIndex::new(Arc::new(PointSet::new(data, 2)?), 6)?;
    let graph = build_graph(&index, 0.3)?;
    let basis = graph.eigenbasis(n, &EigenConfig { solver: EigenSolver::Dense, ..Default::default() })?;
    let opts = PrecisionOptions { inner_cg: CgConfig::with_tol(1e-13), normalization: None };

    println!("full precision P against the full-spectrum kernel K (N = {n}):");
    for nu in 1..=3 {
        let params = HyperParams { alpha: 0.3, kappa: 1.0, sigma2: 1.0, nu, ..Default::default() };
        let k = SpectralKernel::new(basis.clone(), params, 1.0).gram();
        let p = to_dense(&GraphPrecision::new(&graph, &params, 1.0));
        let density = (0..n * n).filter(|&i| p[i] != 0.0).count() as f64 / (n * n) as f64;
        println!("  nu = {nu}: max |K P - I| = {:.2e}, nonzero fraction of P = {density:.3}", dev(&(k * p)));
    }

    let params = HyperParams { alpha: 0.3, kappa: 1.0, sigma2: 1.0, nu: 2, ..Default::default() };
    let labeled: Vec<usize> = (0..n).step_by(3).collect();
    let m = labeled.len();
    let k = SpectralKernel::new(basis.clone(), params, 1.0).gram();
    let kzz = DMatrix::from_fn(m, m, |i, j| k[(labeled[i], labeled[j])]);
    let schur = PrecisionOp::new(&graph, &params, &labeled, false, &opts)?;
    println!("\nSchur complement on {m} labeled nodes: max |K_ZZ S - I| = {:.2e}", dev(&(&kzz * to_dense(&schur))));

    println!("\nnoise expansion S - s S^2 against (K_ZZ + s I)^-1:");
    for noise2 in [1e-2, 2.5e-3, 6.25e-4] {
        let op = PrecisionOp::new(&graph, &HyperParams { noise2, ..params }, &labeled, true, &opts)?;
        let exact = (&kzz + DMatrix::identity(m, m) * noise2).try_inverse().ok_or("singular")?;
        println!("  s = {noise2:.2e}: max error {:.3e}", (to_dense(&op) - exact).abs().max());
    }
    Ok(())
}

fn dev(m: &DMatrix<f64>) -> f64 {
    (m - DMatrix::identity(m.nrows(), m.ncols())).abs().max()
}
