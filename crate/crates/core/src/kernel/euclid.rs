use super::KernelError;

/// Closed-form Matérn smoothness levels.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EuclideanSmoothness {
    Half,
    ThreeHalves,
    FiveHalves,
    /// The `ν → ∞` limit.
    SquaredExponential,
}

impl EuclideanSmoothness {
    pub fn from_nu(nu: f64) -> Result<Self, KernelError> {
        match nu {
            v if v == 0.5 => Ok(Self::Half),
            v if v == 1.5 => Ok(Self::ThreeHalves),
            v if v == 2.5 => Ok(Self::FiveHalves),
            v if v.is_infinite() && v > 0.0 => Ok(Self::SquaredExponential),
            v => Err(KernelError::UnsupportedSmoothness(v)),
        }
    }
}

/// Stationary Matérn kernel on ℝᵈ with length scale `kappa` and variance `sigma2`.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct EuclideanMatern {
    pub smoothness: EuclideanSmoothness,
    pub kappa: f64,
    pub sigma2: f64,
}

impl EuclideanMatern {
    pub fn new(smoothness: EuclideanSmoothness, kappa: f64, sigma2: f64) -> Self {
        Self { smoothness, kappa, sigma2 }
    }

    /// Kernel value at distance `r`.
    pub fn eval_radius(&self, r: f64) -> f64 {
        let k = self.kappa;
        self.sigma2
            * match self.smoothness {
                EuclideanSmoothness::Half => (-r / k).exp(),
                EuclideanSmoothness::ThreeHalves => {
                    let s = 3f64.sqrt() * r / k;
                    (1.0 + s) * (-s).exp()
                }
                EuclideanSmoothness::FiveHalves => {
                    let s = 5f64.sqrt() * r / k;
                    (1.0 + s + s * s / 3.0) * (-s).exp()
                }
                EuclideanSmoothness::SquaredExponential => (-r * r / (2.0 * k * k)).exp(),
            }
    }

    /// `∂k/∂log κ` at distance `r`.
    pub fn d_log_kappa(&self, r: f64) -> f64 {
        let k = self.kappa;
        self.sigma2
            * match self.smoothness {
                EuclideanSmoothness::Half => {
                    let s = r / k;
                    s * (-s).exp()
                }
                EuclideanSmoothness::ThreeHalves => {
                    let s = 3f64.sqrt() * r / k;
                    s * s * (-s).exp()
                }
                EuclideanSmoothness::FiveHalves => {
                    let s = 5f64.sqrt() * r / k;
                    s * s / 3.0 * (1.0 + s) * (-s).exp()
                }
                EuclideanSmoothness::SquaredExponential => {
                    let q = r * r / (k * k);
                    q * (-q / 2.0).exp()
                }
            }
    }

    pub fn eval(&self, x: &[f64], y: &[f64]) -> f64 {
        self.eval_radius(distance(x, y))
    }
}

pub(crate) fn distance(x: &[f64], y: &[f64]) -> f64 {
    x.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt()
}

/// Matérn kernel for `nu ∈ {1/2, 3/2, 5/2, ∞}`.
pub fn euclid_matern(x: &[f64], y: &[f64], nu: f64, kappa: f64, sigma2: f64) -> Result<f64, KernelError> {
    Ok(EuclideanMatern::new(EuclideanSmoothness::from_nu(nu)?, kappa, sigma2).eval(x, y))
}
