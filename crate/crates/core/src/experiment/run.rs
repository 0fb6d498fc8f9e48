use std::sync::Arc;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::graph::{GraphPattern, KnnIndex, PointCloud, PointSet, SparseGraph};
use crate::kernel::{HyperParams, NormConstEstimate};
use crate::linalg::EigenBasis;
use crate::predict::{EuclideanGp, GeometricPosterior, HybridPredictor, NystromExtension, Prediction, MAX_EXTENSION_GAIN};
use crate::train::{
    bandwidth_prior_fit, fit_map, reoptimize_truncated, BandwidthPrior, Checkpoint, FitProblem, PriorSpec,
    TruncatedConfig,
};

use super::data::{gen_circle_dataset, gen_dumbbell, Dataset};
use super::io::{ingest_csv, read_table, write_predictions};
use super::{metrics, DatasetSource, ExperimentConfig, ExperimentError, ModelKind};

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct StageSeconds {
    pub knn: f64,
    pub fit: f64,
    pub eig: f64,
    pub predict: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MetricsReport {
    pub config_echo: ExperimentConfig,
    /// `None` when the test set has no ground truth.
    pub rmse: Option<f64>,
    pub nll: Option<f64>,
    pub stage_seconds: StageSeconds,
    pub floored_variance_count: usize,
    pub warnings: Vec<String>,
    pub n_points: usize,
    pub n_labeled: usize,
    pub n_test: usize,
    /// Fitted graph model hyperparameters, absent for the Euclidean model.
    pub params: Option<HyperParams>,
    pub euclidean_kappa: Option<f64>,
    pub euclidean_noise2: Option<f64>,
    pub checkpoint: Option<String>,
}

#[derive(Debug, Clone)]
pub struct RunOutput {
    pub report: MetricsReport,
    /// Predictions at the test points in the original label scale.
    pub predictions: Vec<Prediction>,
    pub test_points: PointSet,
    pub checkpoint: Option<Checkpoint>,
}

/// Generated or ingested data for a config.
pub fn load_dataset(config: &ExperimentConfig) -> Result<Dataset, ExperimentError> {
    match &config.dataset {
        DatasetSource::Dumbbell { points } => {
            gen_dumbbell(*points, config.beta, config.labeled.count(*points), config.seed)
        }
        DatasetSource::Circle { points } => {
            gen_circle_dataset(*points, config.beta, config.labeled.count(*points), config.seed)
        }
        DatasetSource::Csv { path, test_path } => {
            let cloud = ingest_csv(path)?;
            let (test_points, test_truth) = match test_path {
                Some(p) => {
                    let (pts, labels) = read_table(p)?;
                    let truth = labels.iter().copied().collect::<Option<Vec<f64>>>();
                    (pts, truth)
                }
                None => {
                    let unlabeled: Vec<&[f64]> = (0..cloud.len())
                        .filter(|i| !cloud.labeled_idx().contains(i))
                        .map(|i| cloud.point(i))
                        .collect();
                    let pts = if unlabeled.is_empty() {
                        PointSet::from_rows(&(0..cloud.len()).map(|i| cloud.point(i)).collect::<Vec<_>>())?
                    } else {
                        PointSet::from_rows(&unlabeled)?
                    };
                    (pts, None)
                }
            };
            Ok(Dataset { cloud, node_truth: None, test_points, test_truth })
        }
    }
}

/// A trained model ready for prediction.
#[derive(Debug, Clone)]
pub struct FittedModel {
    pub predictor: HybridPredictor,
    pub checkpoint: Option<Checkpoint>,
    pub warnings: Vec<String>,
    pub seconds: StageSeconds,
    label_mean: f64,
    label_scale: f64,
}

impl FittedModel {
    pub fn denormalize(&self, p: Prediction) -> Prediction {
        Prediction {
            mean: p.mean * self.label_scale + self.label_mean,
            variance: p.variance * self.label_scale * self.label_scale,
            gamma: p.gamma,
        }
    }

    pub fn predict(&self, x: &[f64]) -> Result<Prediction, ExperimentError> {
        Ok(self.denormalize(self.predictor.predict(x)?))
    }
}

/// The cloud the graph is built on: everything, or only the labeled points.
fn graph_cloud(config: &ExperimentConfig, cloud: &PointCloud) -> Result<PointCloud, ExperimentError> {
    match config.model {
        ModelKind::ImgpSupervised => {
            let rows: Vec<&[f64]> = cloud.labeled_idx().iter().map(|&i| cloud.point(i)).collect();
            let n = rows.len();
            Ok(PointCloud::new(PointSet::from_rows(&rows)?, (0..n).collect(), cloud.raw_labels().to_vec())?)
        }
        _ => Ok(cloud.clone()),
    }
}

/// Runs the training stages: KNN index and prior, MAP fit, eigenpairs,
/// optional truncated refit, and the Euclidean component.
pub fn fit_model(config: &ExperimentConfig, cloud: &PointCloud) -> Result<FittedModel, ExperimentError> {
    fit_or_restore(config, cloud, None)
}

/// Rebuilds a model from a checkpoint without optimizing the graph
/// hyperparameters again.
pub fn restore_model(
    config: &ExperimentConfig,
    cloud: &PointCloud,
    checkpoint: &Checkpoint,
) -> Result<FittedModel, ExperimentError> {
    fit_or_restore(config, cloud, Some(checkpoint))
}

fn fit_or_restore(
    config: &ExperimentConfig,
    cloud: &PointCloud,
    restore: Option<&Checkpoint>,
) -> Result<FittedModel, ExperimentError> {
    config.validate()?;
    if cloud.num_labeled() == 0 {
        return Err(ExperimentError::NoLabeledRows);
    }
    let mut seconds = StageSeconds::default();
    let mut warnings = Vec::new();
    let labeled_x: Vec<Vec<f64>> = cloud.labeled_idx().iter().map(|&i| cloud.point(i).to_vec()).collect();
    let fit_euclid = |seconds: &mut StageSeconds| -> Result<EuclideanGp, ExperimentError> {
        let t = Instant::now();
        let gp = EuclideanGp::fit_rows(&labeled_x, cloud.labels(), &config.euclidean)
            .map_err(|e| ExperimentError::from(e).in_stage("fit"))?;
        seconds.fit += t.elapsed().as_secs_f64();
        Ok(gp)
    };

    if config.model == ModelKind::Euclidean {
        let gp = fit_euclid(&mut seconds)?;
        return Ok(FittedModel {
            predictor: HybridPredictor::new(None, Some(gp))?,
            checkpoint: None,
            warnings,
            seconds,
            label_mean: cloud.label_mean(),
            label_scale: cloud.label_scale(),
        });
    }

    let gcloud = graph_cloud(config, cloud)?;
    let noisy = config.noisy();
    let n = gcloud.len();
    if n < 2 {
        return Err(ExperimentError::Config("the graph needs at least two points".into()));
    }
    let k = config.knn.min(n - 1);
    if k < config.knn {
        warnings.push(format!("knn reduced from {} to {k} for {n} points", config.knn));
    }

    // knn stage
    let t = Instant::now();
    let index = KnnIndex::new(gcloud.points().clone(), k).map_err(|e| ExperimentError::from(e).in_stage("knn"))?;
    let pattern = Arc::new(GraphPattern::from_index(&index));
    let prior: BandwidthPrior = bandwidth_prior_fit(&index, config.tau)
        .map_err(|e| ExperimentError::from(e).in_stage("knn"))?;
    let priors = PriorSpec::standard(prior);
    seconds.knn = t.elapsed().as_secs_f64();

    let template = HyperParams {
        nu: config.nu,
        knn: k,
        eigenpairs: config.eigenpairs.min(n),
        ..HyperParams::default()
    };
    let labeled = gcloud.labeled_idx();
    let y = gcloud.labels();

    // fit stage
    let t = Instant::now();
    let (mut params, objective, loss_trace) = match restore {
        Some(cp) => (cp.params, cp.objective, cp.loss_trace.clone()),
        None => {
            let problem = FitProblem { pattern: &pattern, labeled, y, noisy, template };
            let train = crate::train::TrainConfig { seed: config.train.seed ^ config.seed, ..config.train };
            let fit = fit_map(&problem, &train, &priors).map_err(|e| ExperimentError::from(e).in_stage("fit"))?;
            warnings.extend(fit.warnings());
            let trace = fit.trajectories[fit.best_restart]
                .trace
                .iter()
                .filter_map(|e| e.objective)
                .collect();
            (fit.params, fit.objective, trace)
        }
    };
    seconds.fit += t.elapsed().as_secs_f64();

    // eig stage
    let t = Instant::now();
    let graph: SparseGraph = pattern
        .with_bandwidth(params.alpha)
        .map_err(|e| ExperimentError::from(e).in_stage("eig"))?;
    let basis: EigenBasis = graph
        .eigenbasis(template.eigenpairs, &config.eigen)
        .map_err(|e| ExperimentError::from(crate::train::TrainError::from(e)).in_stage("eig"))?;
    // trim before the refit so that training and prediction share one basis
    let ext = NystromExtension::new(graph, basis).map_err(|e| ExperimentError::from(e).in_stage("eig"))?;
    if !ext.dropped().is_empty() {
        warnings.push(format!(
            "{} eigenpairs with eigenvalue at or above {} excluded from the Nyström extension",
            ext.dropped().len(),
            1.0 - 1.0 / MAX_EXTENSION_GAIN
        ));
    }
    let (graph, basis) = ext.into_parts();
    seconds.eig = t.elapsed().as_secs_f64();

    let t = Instant::now();
    let normalization = config.train.precision.normalization;
    let mut norm_const = match (restore, normalization) {
        (Some(cp), _) => cp.norm_const,
        (None, Some(cfg)) => NormConstEstimate::compute(&graph, &params, &cfg)
            .map_err(|e| ExperimentError::from(crate::train::TrainError::from(e)).in_stage("fit"))?
            .value,
        (None, None) => 1.0,
    };
    if config.reoptimize && restore.is_none() {
        let cfg = TruncatedConfig { normalize: normalization.is_some(), ..config.truncated };
        let refit = reoptimize_truncated(&basis, labeled, y, &params, &priors, noisy, &cfg)
            .map_err(|e| ExperimentError::from(e).in_stage("fit"))?;
        log::info!(
            "truncated refit: kappa {:.4} -> {:.4}, sigma2 {:.4} -> {:.4}, objective {:.4} -> {:.4}",
            params.kappa,
            refit.params.kappa,
            params.sigma2,
            refit.params.sigma2,
            refit.initial_objective,
            refit.objective
        );
        params = refit.params;
        norm_const = refit.norm_const;
    }
    seconds.fit += t.elapsed().as_secs_f64();

    let geometric = GeometricPosterior::new(graph, basis, params, norm_const, labeled, y)
        .map_err(|e| ExperimentError::from(e).in_stage("eig"))?;
    let euclid = if config.blend { Some(fit_euclid(&mut seconds)?) } else { None };

    let checkpoint = Checkpoint {
        params,
        noisy,
        norm_const,
        bandwidth_prior: Some(prior),
        prior_mass_above_floor: Some(prior.prob_above_floor()),
        loss_trace,
        objective,
        label_mean: cloud.label_mean(),
        label_scale: cloud.label_scale(),
    };
    Ok(FittedModel {
        predictor: HybridPredictor::new(Some(geometric), euclid)?,
        checkpoint: Some(checkpoint),
        warnings,
        seconds,
        label_mean: cloud.label_mean(),
        label_scale: cloud.label_scale(),
    })
}

/// Predicts at every test point (in parallel, order preserved).
pub fn predict_dataset(model: &FittedModel, points: &PointSet) -> Result<Vec<Prediction>, ExperimentError> {
    (0..points.len())
        .into_par_iter()
        .map(|i| model.predict(points.row(i)).map_err(|e| e.in_stage("predict")))
        .collect()
}

/// Data, training, prediction and scoring; writes artifacts when `out_dir` is set.
pub fn run_experiment(config: &ExperimentConfig) -> Result<RunOutput, ExperimentError> {
    config.validate()?;
    let dataset = load_dataset(config)?;
    run_on_dataset(config, &dataset, None)
}

pub(crate) fn run_on_dataset(
    config: &ExperimentConfig,
    dataset: &Dataset,
    restore: Option<&Checkpoint>,
) -> Result<RunOutput, ExperimentError> {
    let model = fit_or_restore(config, &dataset.cloud, restore)?;
    let mut seconds = model.seconds;
    let t = Instant::now();
    let predictions = predict_dataset(&model, &dataset.test_points)?;
    seconds.predict = t.elapsed().as_secs_f64();

    let mut warnings = model.warnings.clone();
    let (mut rmse, mut nll, mut floored) = (None, None, 0);
    if let Some(truth) = &dataset.test_truth {
        let means: Vec<f64> = predictions.iter().map(|p| p.mean).collect();
        let vars: Vec<f64> = predictions.iter().map(|p| p.variance).collect();
        let s = metrics(&means, &vars, truth)?;
        if !(s.rmse.is_finite() && s.nll.is_finite()) {
            warnings.push("non-finite metrics".into());
        }
        rmse = Some(s.rmse);
        nll = Some(s.nll);
        floored = s.floored_variance_count;
        if floored > 0 {
            warnings.push(format!("{floored} predictive variances floored"));
        }
    }

    let geometric = model.predictor.geometric.as_ref();
    let euclid = model.predictor.euclidean.as_ref();
    let mut report = MetricsReport {
        config_echo: config.clone(),
        rmse,
        nll,
        stage_seconds: seconds,
        floored_variance_count: floored,
        warnings,
        n_points: dataset.cloud.len(),
        n_labeled: dataset.cloud.num_labeled(),
        n_test: dataset.test_points.len(),
        params: geometric.map(|g| *g.params()),
        euclidean_kappa: euclid.map(|e| e.kernel.kappa),
        euclidean_noise2: euclid.map(|e| e.noise2),
        checkpoint: None,
    };

    if let Some(dir) = &config.out_dir {
        std::fs::create_dir_all(dir).map_err(|e| ExperimentError::Io(format!("{}: {e}", dir.display())))?;
        if let Some(cp) = &model.checkpoint {
            let path = dir.join("checkpoint.json");
            cp.save(&path)?;
            report.checkpoint = Some(path.display().to_string());
        }
        write_predictions(dir.join("predictions.csv"), &dataset.test_points, &predictions)?;
        let text = serde_json::to_string_pretty(&report).expect("report serializes");
        std::fs::write(dir.join("metrics.json"), text)?;
    }
    Ok(RunOutput { report, predictions, test_points: dataset.test_points.clone(), checkpoint: model.checkpoint })
}

/// Predicts with a saved checkpoint on the config's dataset.
pub fn predict_from_checkpoint(config: &ExperimentConfig, checkpoint: &Checkpoint) -> Result<RunOutput, ExperimentError> {
    config.validate()?;
    let dataset = load_dataset(config)?;
    run_on_dataset(config, &dataset, Some(checkpoint))
}
