//! MAP training of the graph hyperparameters on the dumbbell: the bandwidth
//! prior from neighborhood radii, the stochastic-gradient fit through the
//! precision matrix, and the refit of kappa and the variances on the
//! truncated eigenbasis.
//!
//! cargo run --release --example fit_hyperparameters -- [seed]

use std::sync::Arc;

use imgp::experiment::{gen_dumbbell, ExperimentConfig};
use imgp::graph::{EigenConfig, GraphPattern, KnnIndex};
use imgp::kernel::{norm_const, HyperParams};
use imgp::train::{bandwidth_prior_fit, fit_map, reoptimize_truncated, FitProblem, PriorSpec, TrainConfig, TruncatedConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    env_logger::init();
    imgp::configure_threads();
    let seed: u64 = std::env::args().nth(1).map(|s| s.parse()).transpose()?.unwrap_or(0);
    let data = gen_dumbbell(1556, 0.0, 10, seed)?;
    let cloud = &data.cloud;

    let index = KnnIndex::new(cloud.points().clone(), 10)?;
    let prior = bandwidth_prior_fit(&index, 0.01)?;
    println!(
        "bandwidth prior: Gamma(shape {:.2}, rate {:.1}), mode {:.4}, floor {:.4}, P(alpha > floor) = {:.3}",
        prior.shape,
        prior.rate,
        prior.mode(),
        prior.alpha_floor,
        prior.prob_above_floor()
    );

    let pattern = Arc::new(GraphPattern::from_index(&index));
    let template = HyperParams { nu: 1, knn: 10, eigenpairs: 50, ..Default::default() };
    let problem = FitProblem { pattern: &pattern, labeled: cloud.labeled_idx(), y: cloud.labels(), noisy: false, template };
    let priors = PriorSpec::standard(prior);
    // the experiment defaults normalize the kernel to unit mean prior variance
    let config = TrainConfig { iters: 60, seed, ..ExperimentConfig::default().train };
    let fit = fit_map(&problem, &config, &priors)?;
    let best = &fit.trajectories[fit.best_restart];
    println!("\nMAP fit, {} Adam steps:", config.iters);
    for entry in best.trace.iter().step_by(10) {
        let p = entry.params;
        println!(
            "  step {:>3}: objective {:>10.4}  alpha {:.4}  kappa {:.4}  sigma2 {:.4}",
            entry.iteration,
            entry.objective.unwrap_or(f64::NAN),
            p.alpha,
            p.kappa,
            p.sigma2
        );
    }
    println!("  final objective {:.4}", fit.objective);

    let graph = pattern.with_bandwidth(fit.params.alpha)?;
    let basis = graph.eigenbasis(50, &EigenConfig::default())?;
    let refit = reoptimize_truncated(
        &basis,
        cloud.labeled_idx(),
        cloud.labels(),
        &fit.params,
        &priors,
        false,
        &TruncatedConfig { normalize: true, ..Default::default() },
    )?;
    let p = refit.params;
    println!(
        "\ntruncated refit ({} steps): objective {:.4} -> {:.4}; kappa {:.3}, sigma2 {:.4}, nugget {:.2e}",
        refit.iterations, refit.initial_objective, refit.objective, p.kappa, p.sigma2, p.noise2
    );
    let c = norm_const(&graph, &p, &Default::default())?;
    println!("mean prior variance before normalization at the refit point: {c:.3e}");
    for w in fit.warnings() {
        println!("warning: {w}");
    }
    Ok(())
}
