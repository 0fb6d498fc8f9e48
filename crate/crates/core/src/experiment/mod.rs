//! Experiment harness: synthetic data, CSV I/O, the fit/predict pipeline,
//! metrics and ablation sweeps.

mod ablate;
mod config;
pub mod data;
pub mod io;
mod metrics;
mod run;

pub use ablate::{ablate, write_ablation_csv, AblationAxis, AblationRow};
pub use config::{DatasetSource, ExperimentConfig, LabeledSpec, ModelKind, NoiseMode};
pub use data::{gen_circle, gen_circle_equispaced, gen_dumbbell, Dataset, Dumbbell};
pub use io::{export_csv, ingest_csv, write_predictions};
pub use metrics::{metrics, Scores, VARIANCE_FLOOR};
pub use run::{
    fit_model, load_dataset, predict_dataset, predict_from_checkpoint, restore_model, run_experiment, FittedModel, MetricsReport, RunOutput, StageSeconds,
};

use crate::graph::GraphError;
use crate::predict::PredictError;
use crate::train::TrainError;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ExperimentError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("I/O error: {0}")]
    Io(String),
    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("line {line}: expected {expected} columns, found {got}")]
    DimensionMismatch { line: usize, expected: usize, got: usize },
    #[error("length mismatch: {0}")]
    LengthMismatch(String),
    #[error("no labeled rows")]
    NoLabeledRows,
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Train(#[from] TrainError),
    #[error(transparent)]
    Predict(#[from] PredictError),
    #[error("{stage} stage failed: {source}")]
    Stage {
        stage: &'static str,
        #[source]
        source: Box<ExperimentError>,
    },
}

impl ExperimentError {
    pub fn in_stage(self, stage: &'static str) -> Self {
        match self {
            e @ ExperimentError::Stage { .. } => e,
            e => ExperimentError::Stage { stage, source: Box::new(e) },
        }
    }

    /// Process exit code: 2 for configuration problems, 3 for numerical
    /// failures, 4 for I/O.
    pub fn exit_code(&self) -> i32 {
        match self {
            ExperimentError::Config(_)
            | ExperimentError::Parse { .. }
            | ExperimentError::DimensionMismatch { .. }
            | ExperimentError::NoLabeledRows
            | ExperimentError::LengthMismatch(_) => 2,
            ExperimentError::Io(_) => 4,
            ExperimentError::Graph(GraphError::InvalidInput(_) | GraphError::KTooLarge { .. })
            | ExperimentError::Train(TrainError::InvalidConfig(_) | TrainError::NoLabels) => 2,
            ExperimentError::Graph(_) | ExperimentError::Train(_) | ExperimentError::Predict(_) => 3,
            ExperimentError::Stage { source, .. } => source.exit_code(),
        }
    }
}

impl From<std::io::Error> for ExperimentError {
    fn from(e: std::io::Error) -> Self {
        ExperimentError::Io(e.to_string())
    }
}
