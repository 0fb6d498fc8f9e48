use std::path::Path;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{run_experiment, ExperimentConfig, ExperimentError, LabeledSpec};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum AblationAxis {
    Eigenpairs,
    LabeledFraction,
    Beta,
}

impl AblationAxis {
    pub fn name(&self) -> &'static str {
        match self {
            AblationAxis::Eigenpairs => "eigenpairs",
            AblationAxis::LabeledFraction => "labeled_fraction",
            AblationAxis::Beta => "beta",
        }
    }

    fn apply(&self, config: &mut ExperimentConfig, value: f64) -> Result<(), ExperimentError> {
        match self {
            AblationAxis::Eigenpairs => {
                if !(value >= 1.0 && value.fract() == 0.0) {
                    return Err(ExperimentError::Config(format!("eigenpairs grid value {value} is not a positive integer")));
                }
                config.eigenpairs = value as usize;
            }
            AblationAxis::LabeledFraction => config.labeled = LabeledSpec::Fraction(value),
            AblationAxis::Beta => config.beta = value,
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AblationRow {
    pub value: f64,
    pub rmse: Option<f64>,
    pub nll: Option<f64>,
    pub seconds: f64,
    pub error: Option<String>,
}

/// Reruns the experiment at each grid value of one axis, all with the
/// config's data seed. A failing grid point is recorded and the sweep goes on.
pub fn ablate(config: &ExperimentConfig, axis: AblationAxis, grid: &[f64]) -> Result<Vec<AblationRow>, ExperimentError> {
    if grid.is_empty() {
        return Err(ExperimentError::Config("ablation grid is empty".into()));
    }
    let rows = grid
        .par_iter()
        .map(|&value| {
            let t = Instant::now();
            let mut cfg = ExperimentConfig { out_dir: None, ..config.clone() };
            let outcome = axis.apply(&mut cfg, value).and_then(|_| run_experiment(&cfg));
            let seconds = t.elapsed().as_secs_f64();
            match outcome {
                Ok(out) => AblationRow { value, rmse: out.report.rmse, nll: out.report.nll, seconds, error: None },
                Err(e) => AblationRow { value, rmse: None, nll: None, seconds, error: Some(e.to_string()) },
            }
        })
        .collect();
    Ok(rows)
}

/// CSV with columns `<axis>,rmse,nll,seconds,error`.
pub fn write_ablation_csv(path: impl AsRef<Path>, axis: AblationAxis, rows: &[AblationRow]) -> Result<(), ExperimentError> {
    let io = |e: csv::Error| ExperimentError::Io(e.to_string());
    let mut w = csv::Writer::from_path(path.as_ref()).map_err(io)?;
    w.write_record([axis.name(), "rmse", "nll", "seconds", "error"]).map_err(io)?;
    let opt = |v: Option<f64>| v.map(|x| format!("{x:?}")).unwrap_or_default();
    for r in rows {
        w.write_record([
            format!("{:?}", r.value),
            opt(r.rmse),
            opt(r.nll),
            format!("{:.3}", r.seconds),
            r.error.clone().unwrap_or_default(),
        ])
        .map_err(io)?;
    }
    w.flush().map_err(|e| ExperimentError::Io(e.to_string()))
}
