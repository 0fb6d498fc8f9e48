//! JSON checkpoint of a fitted model.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::kernel::HyperParams;

use super::BandwidthPrior;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    /// Learned `(α, κ, σ², σ_ε²)` together with the fixed `(ν, K, L)`.
    pub params: HyperParams,
    pub noisy: bool,
    pub norm_const: f64,
    pub bandwidth_prior: Option<BandwidthPrior>,
    /// Probability mass of the bandwidth prior above its floor.
    pub prior_mass_above_floor: Option<f64>,
    /// MAP objective per iteration of the winning restart.
    pub loss_trace: Vec<f64>,
    pub objective: f64,
    pub label_mean: f64,
    pub label_scale: f64,
}

impl Checkpoint {
    pub fn save(&self, path: impl AsRef<Path>) -> std::io::Result<()> {
        let text = serde_json::to_string_pretty(self).map_err(std::io::Error::other)?;
        std::fs::write(path, text)
    }

    pub fn load(path: impl AsRef<Path>) -> std::io::Result<Self> {
        let text = std::fs::read_to_string(path)?;
        serde_json::from_str(&text).map_err(|e| std::io::Error::new(std::io::ErrorKind::InvalidData, e))
    }
}
