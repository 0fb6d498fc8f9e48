//! Blending the graph posterior with a Euclidean GP away from the point
//! cloud: the weight of the graph model falls smoothly from 1 on the cloud to
//! 0 beyond three bandwidths, and the prediction follows.
//!
//! cargo run --release --example hybrid_blend

use imgp::experiment::{fit_model, gen_dumbbell, Dumbbell, ExperimentConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    imgp::configure_threads();
    let config = ExperimentConfig { blend: true, ..Default::default() };
    let data = gen_dumbbell(1556, 0.0, 10, 0)?;
    let model = fit_model(&config, &data.cloud)?;
    println!("blend radius {:.4}", model.predictor.blend_radius());

    let curve = Dumbbell::default();
    let anchor = curve.point(0.6 * curve.length());
    println!("\nmoving off the curve at arclength 0.6 L (truth {:.4}):", curve.target(0.6 * curve.length()));
    println!("{:>8} {:>10} {:>7} {:>10} {:>10}", "offset", "distance", "gamma", "mean", "sd");
    for offset in [0.0, 0.02, 0.05, 0.1, 0.15, 0.2, 0.3, 0.6] {
        let x = [anchor[0] + offset, anchor[1]];
        let p = model.predict(&x)?;
        let d = model.predictor.manifold_distance(&x).unwrap_or(f64::NAN);
        println!("{offset:>8.2} {d:>10.4} {:>7.4} {:>10.4} {:>10.4}", p.gamma, p.mean, p.variance.sqrt());
    }
    Ok(())
}
