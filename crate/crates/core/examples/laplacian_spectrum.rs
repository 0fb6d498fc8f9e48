//! KNN graph on points sampled from the unit circle and the low end of its
//! Laplacian spectra. The Laplace-Beltrami spectrum of the circle is
//! 0, 1, 1, 4, 4, 9, 9, ...; the graph eigenvalues match it up to one scale.
//!
//! cargo run --release --example laplacian_spectrum -- [points] [seed]

use std::sync::Arc;

use imgp::experiment::gen_circle;
use imgp::graph::{build_graph, EigenConfig, KnnIndex, LaplacianKind};
use imgp::linalg::{to_dense, dense_smallest_eigenpairs};
use imgp::train::bandwidth_prior_fit;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut args = std::env::args().skip(1);
    let n: usize = args.next().map(|s| s.parse()).transpose()?.unwrap_or(1000);
    let seed: u64 = args.next().map(|s| s.parse()).transpose()?.unwrap_or(1);

    let index = KnnIndex::new(Arc::new(gen_circle(n, 1.0, seed)?), 10)?;
    let prior = bandwidth_prior_fit(&index, 0.01)?;
    let graph = build_graph(&index, prior.mode())?;
    println!("{n} points, K = 10, alpha = {:.5} (prior mode), {} stored edges", prior.mode(), graph.adj().nnz());

    let basis = graph.eigenbasis(7, &EigenConfig::default())?;
    let unit = basis.eigenvalues[1];
    println!("\nrandom-walk Laplacian, scaled so that lambda_1 = 1:");
    for (l, v) in basis.eigenvalues.iter().enumerate() {
        println!("  lambda_{l} = {:>8.4}", v / unit);
    }
    println!("D-orthonormality residual of the eigenvectors: {:.2e}", basis.orthonormality_residual());

    if n <= 1500 {
        let un = dense_smallest_eigenpairs(&to_dense(&graph.laplacian(LaplacianKind::Unnormalized)), 5)?;
        println!("\nunnormalized Laplacian D - A (dense), same scaling:");
        for (l, v) in un.values.iter().enumerate() {
            println!("  lambda_{l} = {:>8.4}", v / un.values[1]);
        }
    }
    Ok(())
}
