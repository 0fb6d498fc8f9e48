//! The Euclidean Matérn-5/2 baseline: marginal-likelihood training, exact
//! prediction, and the random-Fourier-feature route used for large inputs.
//!
//! cargo run --release --example euclidean_baseline

use imgp::predict::{EuclideanFitConfig, EuclideanGp, EuclideanModel};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let f = |x: &[f64]| (2.0 * x[0]).sin() * x[1].cos();
    let x: Vec<Vec<f64>> = (0..400).map(|_| vec![rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0)]).collect();
    let y: Vec<f64> = x.iter().map(|p| f(p) + 0.05 * rng.random_range(-1.0..1.0)).collect();
    let test: Vec<Vec<f64>> = (0..200).map(|_| vec![rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0)]).collect();

    for (label, threshold) in [("exact", usize::MAX), ("random features", 0)] {
        let config = EuclideanFitConfig { rff_threshold: threshold, rff_features: 1000, ..Default::default() };
        let gp = EuclideanGp::fit_rows(&x, &y, &config)?;
        let route = match gp.model() {
            EuclideanModel::Exact { .. } => "Cholesky",
            EuclideanModel::Rff { .. } => "feature space",
        };
        let rmse = (test.iter().map(|p| (gp.posterior(p).0 - f(p)).powi(2)).sum::<f64>() / test.len() as f64).sqrt();
        println!(
            "{label:<16} ({route}): kappa {:.3}  sigma2 {:.3}  noise2 {:.2e}  test RMSE {rmse:.4}",
            gp.kernel.kappa, gp.kernel.sigma2, gp.noise2
        );
    }
    Ok(())
}
