//! Posterior inference on a noisy circle: pointwise mean and variance at
//! arbitrary angles and joint posterior samples, written as CSV to stdout
//! (angle, truth, mean, sd, sample_1, ...).
//!
//! cargo run --release --example posterior_samples > samples.csv

use std::sync::Arc;

use imgp::graph::{build_graph, EigenConfig, KnnIndex, PointSet};
use imgp::kernel::HyperParams;
use imgp::predict::GeometricPosterior;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let n = 800;
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let angles: Vec<f64> = (0..n).map(|_| rng.random_range(0.0..std::f64::consts::TAU)).collect();
    let data: Vec<f64> = angles.iter().flat_map(|t| [t.cos(), t.sin()]).collect();
    let index = KnnIndex::new(Arc::new(PointSet::new(data, 2)?), 10)?;
    let graph = build_graph(&index, 0.02)?;
    let basis = graph.eigenbasis(40, &EigenConfig::default())?;

    let truth = |t: f64| (3.0 * t).sin();
    let labeled: Vec<usize> = (0..n).filter(|&i| angles[i] < 4.0).step_by(40).collect();
    let y: Vec<f64> = labeled.iter().map(|&i| truth(angles[i]) + 0.05 * rng.random_range(-1.0..1.0)).collect();
    eprintln!("{} labels, all at angles below 4 rad", labeled.len());

    let params = HyperParams { alpha: 0.02, kappa: 30.0, sigma2: 1.0, noise2: 2.5e-3, nu: 2, ..Default::default() };
    let norm = imgp::kernel::norm_const(&graph, &params, &Default::default())?;
    let post = GeometricPosterior::new(graph, basis, params, norm, &labeled, &y)?;

    let grid: Vec<[f64; 2]> = (0..90).map(|i| i as f64 * std::f64::consts::TAU / 90.0).map(|t| [t.cos(), t.sin()]).collect();
    let samples = post.sample_posterior(&grid, 3, 11)?;
    let mut out = csv::Writer::from_writer(std::io::stdout());
    out.write_record(["angle", "truth", "mean", "sd", "sample_1", "sample_2", "sample_3"])?;
    for (j, x) in grid.iter().enumerate() {
        let t = x[1].atan2(x[0]).rem_euclid(std::f64::consts::TAU);
        let (m, v) = post.posterior(x)?;
        let mut row = vec![t, truth(t), m, v.sqrt()];
        row.extend(samples.column(j).iter());
        out.write_record(row.iter().map(|v| format!("{v:.5}")))?;
    }
    out.flush()?;
    Ok(())
}
