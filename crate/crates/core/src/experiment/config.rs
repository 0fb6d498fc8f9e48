use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::graph::EigenConfig;
use crate::kernel::NormConstConfig;
use crate::predict::EuclideanFitConfig;
use crate::train::{PrecisionOptions, TrainConfig, TruncatedConfig};

use super::ExperimentError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum DatasetSource {
    Dumbbell { points: usize },
    Circle { points: usize },
    /// Training cloud from a CSV; scored against `test_path` when it has labels.
    Csv { path: PathBuf, test_path: Option<PathBuf> },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LabeledSpec {
    Count(usize),
    /// Fraction of the cloud, rounded to the nearest count.
    Fraction(f64),
}

impl LabeledSpec {
    pub fn count(&self, n_points: usize) -> usize {
        match *self {
            LabeledSpec::Count(n) => n,
            LabeledSpec::Fraction(f) => (f * n_points as f64).round() as usize,
        }
    }
}

impl std::str::FromStr for LabeledSpec {
    type Err = String;

    /// `10` is a count; `5%` and `0.05` are fractions.
    fn from_str(s: &str) -> Result<Self, String> {
        let s = s.trim();
        if let Some(p) = s.strip_suffix('%') {
            let v: f64 = p.parse().map_err(|_| format!("bad percentage {s:?}"))?;
            return Ok(LabeledSpec::Fraction(v / 100.0));
        }
        if let Ok(n) = s.parse::<usize>() {
            return Ok(LabeledSpec::Count(n));
        }
        match s.parse::<f64>() {
            Ok(f) if (0.0..=1.0).contains(&f) => Ok(LabeledSpec::Fraction(f)),
            _ => Err(format!("expected a count, a fraction in [0, 1] or a percentage, got {s:?}")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    /// Graph over the labeled points only.
    ImgpSupervised,
    /// Graph over labeled and unlabeled points.
    ImgpSemisupervised,
    /// Euclidean Matérn baseline.
    Euclidean,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NoiseMode {
    /// Learn observation noise when the data are noisy: `beta > 0` for
    /// generated data, always for CSV input.
    Auto,
    On,
    Off,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ExperimentConfig {
    pub dataset: DatasetSource,
    /// Input and output noise standard deviation of generated data.
    pub beta: f64,
    pub labeled: LabeledSpec,
    pub model: ModelKind,
    pub nu: u32,
    pub knn: usize,
    pub eigenpairs: usize,
    pub train: TrainConfig,
    /// Bandwidth prior tail probability.
    pub tau: f64,
    pub noise: NoiseMode,
    /// Blend with a Euclidean GP away from the point cloud.
    pub blend: bool,
    /// Refit `κ, σ², σ_ε²` on the truncated eigenbasis before predicting.
    pub reoptimize: bool,
    pub truncated: TruncatedConfig,
    pub euclidean: EuclideanFitConfig,
    pub eigen: EigenConfig,
    pub seed: u64,
    pub out_dir: Option<PathBuf>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            dataset: DatasetSource::Dumbbell { points: 1556 },
            beta: 0.0,
            labeled: LabeledSpec::Count(10),
            model: ModelKind::ImgpSemisupervised,
            nu: 1,
            knn: 10,
            eigenpairs: 50,
            train: TrainConfig {
                precision: PrecisionOptions { normalization: Some(NormConstConfig::default()), ..Default::default() },
                ..Default::default()
            },
            tau: 0.01,
            noise: NoiseMode::Auto,
            blend: true,
            reoptimize: true,
            truncated: TruncatedConfig::default(),
            euclidean: EuclideanFitConfig::default(),
            eigen: EigenConfig::default(),
            seed: 0,
            out_dir: None,
        }
    }
}

impl ExperimentConfig {
    pub fn from_json_file(path: impl AsRef<Path>) -> Result<Self, ExperimentError> {
        let text = std::fs::read_to_string(path.as_ref())
            .map_err(|e| ExperimentError::Io(format!("{}: {e}", path.as_ref().display())))?;
        serde_json::from_str(&text).map_err(|e| ExperimentError::Config(format!("{}: {e}", path.as_ref().display())))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    pub fn noisy(&self) -> bool {
        match self.noise {
            NoiseMode::On => true,
            NoiseMode::Off => false,
            NoiseMode::Auto => match self.dataset {
                DatasetSource::Csv { .. } => true,
                _ => self.beta > 0.0,
            },
        }
    }

    pub fn validate(&self) -> Result<(), ExperimentError> {
        let bad = |m: String| Err(ExperimentError::Config(m));
        if !(self.beta >= 0.0 && self.beta.is_finite()) {
            return bad(format!("beta must be a nonnegative number, got {}", self.beta));
        }
        if self.nu == 0 {
            return bad("nu must be a positive integer".into());
        }
        if self.knn == 0 {
            return bad("knn must be at least 1".into());
        }
        if self.eigenpairs == 0 {
            return bad("eigenpairs must be at least 1".into());
        }
        if !(self.tau > 0.0 && self.tau < 1.0) {
            return bad(format!("tau must lie in (0, 1), got {}", self.tau));
        }
        if let LabeledSpec::Fraction(f) = self.labeled {
            if !(0.0..=1.0).contains(&f) {
                return bad(format!("labeled fraction must lie in [0, 1], got {f}"));
            }
        }
        self.train.validate().map_err(|e| ExperimentError::Config(e.to_string()))?;
        if let DatasetSource::Csv { path, test_path } = &self.dataset {
            for p in std::iter::once(path).chain(test_path) {
                if !p.exists() {
                    return Err(ExperimentError::Io(format!("{} does not exist", p.display())));
                }
            }
        }
        Ok(())
    }
}
