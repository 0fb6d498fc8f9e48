use std::sync::Arc;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::graph::GraphPattern;
use crate::kernel::HyperParams;
use crate::linalg::{mix_seed, CgConfig, LinearOperator};

use super::{
    grad_log_likelihood, log_likelihood, Adam, LogDetMethod, PrecisionOp, PrecisionOptions, PriorSpec, TraceProbes,
    TrainError,
};

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub iters: usize,
    pub learning_rate: f64,
    pub restarts: usize,
    pub probes_per_step: usize,
    /// Use every basis vector as a probe (exact gradients, `n` solves per step).
    pub exhaustive_probes: bool,
    pub cg: CgConfig,
    pub precision: PrecisionOptions,
    pub log_det: LogDetMethod,
    /// Evaluate the objective at every iteration for the loss trace.
    pub trace_objective: bool,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            iters: 100,
            learning_rate: 0.01,
            restarts: 1,
            probes_per_step: 1,
            exhaustive_probes: false,
            cg: CgConfig::default(),
            precision: PrecisionOptions::default(),
            log_det: LogDetMethod::default(),
            trace_objective: true,
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<(), TrainError> {
        if self.iters == 0 {
            return Err(TrainError::InvalidConfig("iters must be at least 1".into()));
        }
        if !(self.learning_rate > 0.0) {
            return Err(TrainError::InvalidConfig("learning rate must be positive".into()));
        }
        if self.restarts == 0 {
            return Err(TrainError::InvalidConfig("restarts must be at least 1".into()));
        }
        Ok(())
    }
}

/// What is being fitted: the graph pattern, the observations and the fixed
/// parts of the hyperparameters (`nu`, `knn`, `eigenpairs`).
#[derive(Debug, Clone, Copy)]
pub struct FitProblem<'a> {
    pub pattern: &'a Arc<GraphPattern>,
    pub labeled: &'a [usize],
    pub y: &'a [f64],
    /// Learn the observation noise through the two-term expansion.
    pub noisy: bool,
    pub template: HyperParams,
}

#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct TraceEntry {
    pub iteration: usize,
    /// MAP objective before the step; `None` when tracing is off.
    pub objective: Option<f64>,
    pub params: HyperParams,
}

#[derive(Debug, Clone, serde::Serialize, serde::Deserialize)]
pub struct Trajectory {
    pub restart: usize,
    pub init: HyperParams,
    pub params: HyperParams,
    pub objective: Option<f64>,
    pub trace: Vec<TraceEntry>,
    pub error: Option<String>,
    pub warnings: Vec<String>,
}

#[derive(Debug, Clone, serde::Serialize, serde::Deserialize)]
pub struct FitResult {
    pub params: HyperParams,
    pub objective: f64,
    pub best_restart: usize,
    pub trajectories: Vec<Trajectory>,
}

impl FitResult {
    pub fn warnings(&self) -> Vec<String> {
        self.trajectories
            .iter()
            .flat_map(|t| t.warnings.iter().map(move |w| format!("restart {}: {w}", t.restart)))
            .collect()
    }
}

/// `½ (log det P̃ − yᵀP̃y) + log prior`, the log posterior up to a constant.
pub fn map_objective(
    problem: &FitProblem<'_>,
    params: &HyperParams,
    priors: &PriorSpec,
    config: &TrainConfig,
) -> Result<f64, TrainError> {
    let graph = problem.pattern.with_bandwidth(params.alpha)?;
    let op = PrecisionOp::new(&graph, params, problem.labeled, problem.noisy, &config.precision)?;
    let l = log_likelihood(&op, problem.y, &config.log_det)?;
    Ok(0.5 * l + priors.log_prior(params, problem.noisy))
}

/// Gradient of [`map_objective`] over the log-parameters.
pub fn map_gradient(
    problem: &FitProblem<'_>,
    params: &HyperParams,
    priors: &PriorSpec,
    config: &TrainConfig,
    probe_seed: u64,
) -> Result<[f64; 4], TrainError> {
    let graph = problem.pattern.with_bandwidth(params.alpha)?;
    let op = PrecisionOp::new(&graph, params, problem.labeled, problem.noisy, &config.precision)?;
    let probes = if config.exhaustive_probes {
        TraceProbes::Exhaustive
    } else {
        TraceProbes::Hutchinson { count: config.probes_per_step, seed: probe_seed }
    };
    let g = grad_log_likelihood(&op, problem.y, &probes, &config.cg)?;
    let p = priors.grad_log_prior(params, problem.noisy);
    let mut out = [0.0; 4];
    for c in 0..4 {
        out[c] = 0.5 * g[c] + p[c];
    }
    Ok(out)
}

/// `σ_ε² λ_max(S)`; the two-term noise expansion stays positive definite
/// only while this is below 1.
pub fn taylor_margin(problem: &FitProblem<'_>, params: &HyperParams, config: &TrainConfig) -> Result<f64, TrainError> {
    let graph = problem.pattern.with_bandwidth(params.alpha)?;
    let op = PrecisionOp::new(&graph, params, problem.labeled, false, &config.precision)?;
    let n = op.dim();
    let mut v: Vec<f64> = (0..n).map(|i| 1.0 + (i as f64 * 0.618).fract()).collect();
    let mut lambda = 0.0;
    for _ in 0..50 {
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        v.iter_mut().for_each(|x| *x /= norm);
        let w = op.apply_vec(&v);
        lambda = v.iter().zip(&w).map(|(a, b)| a * b).sum::<f64>();
        v = w;
    }
    Ok(params.noise2 * lambda)
}

/// MAP estimate by restarted Adam in log-parameter space.
///
/// Every restart starts from a prior sample (with `κ` at the prior's
/// `kappa_init`) and runs a fixed number of steps; the restart with the best
/// final objective wins. A step that lands on a non-positive-definite operator
/// is undone and retried with half the learning rate.
pub fn fit_map(problem: &FitProblem<'_>, config: &TrainConfig, priors: &PriorSpec) -> Result<FitResult, TrainError> {
    config.validate()?;
    if problem.labeled.is_empty() {
        return Err(TrainError::NoLabels);
    }
    let trajectories: Vec<Trajectory> = (0..config.restarts)
        .into_par_iter()
        .map(|r| run_trajectory(problem, config, priors, r))
        .collect();
    let best = trajectories
        .iter()
        .filter(|t| t.error.is_none())
        .filter_map(|t| t.objective.map(|o| (t.restart, o)))
        .max_by(|a, b| a.1.total_cmp(&b.1));
    match best {
        Some((r, objective)) => Ok(FitResult {
            params: trajectories[r].params,
            objective,
            best_restart: r,
            trajectories,
        }),
        None => Err(TrainError::AllRestartsFailed(
            trajectories.iter().map(|t| t.error.clone().unwrap_or_default()).collect(),
        )),
    }
}

const MAX_CONSECUTIVE_FAILURES: usize = 6;

fn run_trajectory(problem: &FitProblem<'_>, config: &TrainConfig, priors: &PriorSpec, restart: usize) -> Trajectory {
    let seed = mix_seed(config.seed, &[restart as u64]);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let init = priors.sample_init(&problem.template, problem.noisy, &mut rng);
    let mut traj = Trajectory {
        restart,
        init,
        params: init,
        objective: None,
        trace: Vec::new(),
        error: None,
        warnings: Vec::new(),
    };
    let active = [true, true, true, problem.noisy];
    let mut theta = init.log_vector();
    let mut adam = Adam::new(4, config.learning_rate);
    if problem.noisy {
        check_taylor(problem, &init, config, &mut traj.warnings);
    }
    let mut failures = 0;
    let mut it = 0;
    while it < config.iters {
        let params = problem.template.with_log_vector(&theta);
        let step = (|| -> Result<(Option<f64>, [f64; 4]), TrainError> {
            let objective = if config.trace_objective {
                Some(map_objective(problem, &params, priors, config)?)
            } else {
                None
            };
            let grad = map_gradient(problem, &params, priors, config, mix_seed(seed, &[it as u64]))?;
            if grad.iter().any(|g| !g.is_finite()) || objective.is_some_and(|o| !o.is_finite()) {
                return Err(TrainError::NonFinite(format!("objective or gradient at iteration {it}")));
            }
            Ok((objective, grad))
        })();
        match step {
            Ok((objective, grad)) => {
                failures = 0;
                traj.trace.push(TraceEntry { iteration: it, objective, params });
                traj.params = params;
                let previous = theta;
                adam.ascend(&mut theta, &grad, &active);
                if theta.iter().zip(&active).any(|(t, &a)| a && !t.is_finite()) {
                    theta = previous;
                }
                it += 1;
            }
            Err(err) => {
                failures += 1;
                let Some(last) = traj.trace.last() else {
                    traj.error = Some(format!("initial point rejected: {err}"));
                    return traj;
                };
                if failures > MAX_CONSECUTIVE_FAILURES {
                    traj.error = Some(format!("iteration {it}: {err}"));
                    return traj;
                }
                traj.warnings.push(format!("iteration {it}: {err}; halving the learning rate"));
                theta = last.params.log_vector();
                if !problem.noisy {
                    theta[3] = f64::NEG_INFINITY;
                }
                adam.learning_rate *= 0.5;
            }
        }
    }
    let final_params = problem.template.with_log_vector(&theta);
    match map_objective(problem, &final_params, priors, config) {
        Ok(o) if o.is_finite() => {
            traj.params = final_params;
            traj.objective = Some(o);
        }
        _ => {
            // fall back to the last point that evaluated cleanly
            traj.objective = traj.trace.last().and_then(|e| e.objective).or_else(|| {
                map_objective(problem, &traj.params, priors, config).ok()
            });
            if traj.objective.is_none() {
                traj.error = Some("final objective could not be evaluated".into());
            }
        }
    }
    if problem.noisy {
        check_taylor(problem, &traj.params, config, &mut traj.warnings);
    }
    traj
}

fn check_taylor(problem: &FitProblem<'_>, params: &HyperParams, config: &TrainConfig, warnings: &mut Vec<String>) {
    match taylor_margin(problem, params, config) {
        Ok(m) if m >= 1.0 => warnings.push(format!(
            "noise expansion not positive definite (sigma_eps^2 * lambda_max = {m:.3}) at noise2 = {:.3e}",
            params.noise2
        )),
        Ok(_) => {}
        Err(err) => warnings.push(format!("could not estimate the noise expansion margin: {err}")),
    }
}
