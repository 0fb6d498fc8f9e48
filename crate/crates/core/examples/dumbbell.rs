//! End-to-end regression on the dumbbell curve: the graph model trained on
//! 10 labels and 1546 unlabeled points against a Euclidean Matérn-5/2 GP.
//!
//! cargo run --release --example dumbbell -- [beta] [seed]

use imgp::experiment::{run_experiment, ExperimentConfig, ModelKind};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    env_logger::init();
    imgp::configure_threads();
    let mut args = std::env::args().skip(1);
    let beta: f64 = args.next().map(|s| s.parse()).transpose()?.unwrap_or(0.0);
    let seed: u64 = args.next().map(|s| s.parse()).transpose()?.unwrap_or(0);

    println!("{:<22} {:>10} {:>10} {:>9}", "model", "RMSE", "NLL", "seconds");
    for model in [ModelKind::ImgpSemisupervised, ModelKind::Euclidean] {
        let config = ExperimentConfig { beta, seed, model, ..Default::default() };
        let out = run_experiment(&config)?;
        let r = &out.report;
        let s = r.stage_seconds;
        println!(
            "{:<22} {:>10.4} {:>10.4} {:>9.2}",
            format!("{model:?}"),
            r.rmse.unwrap_or(f64::NAN),
            r.nll.unwrap_or(f64::NAN),
            s.knn + s.fit + s.eig + s.predict
        );
        if let Some(p) = r.params {
            println!(
                "  alpha {:.4}  kappa {:.4}  sigma2 {:.4}  noise2 {:.2e}",
                p.alpha, p.kappa, p.sigma2, p.noise2
            );
        }
        for w in &r.warnings {
            println!("  warning: {w}");
        }
    }
    Ok(())
}
