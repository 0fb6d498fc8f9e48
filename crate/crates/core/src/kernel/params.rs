use super::KernelError;

/// Hyperparameters of the graph Matérn model.
///
/// `(alpha, kappa, sigma2, noise2)` are learned; `nu`, `knn` and `eigenpairs`
/// are fixed by the user.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct HyperParams {
    pub alpha: f64,
    pub kappa: f64,
    pub sigma2: f64,
    pub noise2: f64,
    pub nu: u32,
    pub knn: usize,
    pub eigenpairs: usize,
}

impl Default for HyperParams {
    fn default() -> Self {
        Self {
            alpha: 1.0,
            kappa: 1.0,
            sigma2: 1.0,
            noise2: 0.0,
            nu: 1,
            knn: 10,
            eigenpairs: 50,
        }
    }
}

impl HyperParams {
    pub fn validate(&self) -> Result<(), KernelError> {
        let ok = |v: f64| v > 0.0 && v.is_finite();
        if !ok(self.alpha) || !ok(self.kappa) || !ok(self.sigma2) {
            return Err(KernelError::InvalidHyperParams(format!(
                "alpha, kappa and sigma2 must be positive (got {}, {}, {})",
                self.alpha, self.kappa, self.sigma2
            )));
        }
        if !(self.noise2 >= 0.0) || !self.noise2.is_finite() {
            return Err(KernelError::InvalidHyperParams(format!(
                "noise2 must be nonnegative (got {})",
                self.noise2
            )));
        }
        if self.nu == 0 {
            return Err(KernelError::InvalidHyperParams("nu must be a positive integer".into()));
        }
        Ok(())
    }

    /// `2 nu / kappa^2`, the shift in `Φ(λ) = (shift + λ)^{-nu}`.
    pub fn shift(&self) -> f64 {
        2.0 * self.nu as f64 / (self.kappa * self.kappa)
    }

    /// Optimizer coordinates `(log α, log κ, log σ², log σ_ε²)`.
    pub fn log_vector(&self) -> [f64; 4] {
        [
            self.alpha.ln(),
            self.kappa.ln(),
            self.sigma2.ln(),
            self.noise2.ln(),
        ]
    }

    pub fn with_log_vector(&self, theta: &[f64; 4]) -> Self {
        Self {
            alpha: theta[0].exp(),
            kappa: theta[1].exp(),
            sigma2: theta[2].exp(),
            noise2: theta[3].exp(),
            ..*self
        }
    }
}
