use rand::Rng;
use rand_distr::{Distribution, Gamma as GammaSampler, Normal};
use statrs::distribution::{ContinuousCDF, Gamma, Normal as NormalDist};
use statrs::function::gamma::ln_gamma;

use crate::graph::KnnIndex;
use crate::kernel::HyperParams;

use super::TrainError;

/// Per node, the distance to the farthest of its `K` nearest neighbors.
pub fn neighborhood_radii(index: &KnnIndex) -> Vec<f64> {
    index
        .all_node_neighbors()
        .iter()
        .map(|nb| nb.last().map_or(0.0, |n| n.distance()))
        .collect()
}

/// Gamma prior on the graph bandwidth, with the diagnostics it was built from.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct BandwidthPrior {
    pub shape: f64,
    pub rate: f64,
    /// Median neighborhood radius; the prior mode.
    pub q2: f64,
    /// Bandwidth below which the smallest neighborhood weight falls under `tau`.
    pub alpha_floor: f64,
    pub rho: f64,
    pub tau: f64,
}

impl BandwidthPrior {
    pub fn mode(&self) -> f64 {
        (self.shape - 1.0) / self.rate
    }

    /// Prior mass above [`Self::alpha_floor`].
    pub fn prob_above_floor(&self) -> f64 {
        let g = Gamma::new(self.shape, self.rate).expect("valid gamma parameters");
        1.0 - g.cdf(self.alpha_floor)
    }

    pub fn log_density(&self, alpha: f64) -> f64 {
        self.shape * self.rate.ln() - ln_gamma(self.shape) + (self.shape - 1.0) * alpha.ln() - self.rate * alpha
    }

    pub fn d_log_density_d_log_alpha(&self, alpha: f64) -> f64 {
        (self.shape - 1.0) - self.rate * alpha
    }
}

/// Fits the bandwidth prior to the neighborhood radii of the graph.
pub fn bandwidth_prior_fit(index: &KnnIndex, tau: f64) -> Result<BandwidthPrior, TrainError> {
    bandwidth_prior_from_radii(&neighborhood_radii(index), tau)
}

pub fn bandwidth_prior_from_radii(radii: &[f64], tau: f64) -> Result<BandwidthPrior, TrainError> {
    if !(tau > 0.0 && tau < 1.0) {
        return Err(TrainError::InvalidConfig(format!("tau must lie in (0, 1), got {tau}")));
    }
    if radii.is_empty() {
        return Err(TrainError::InvalidConfig("no neighborhood radii".into()));
    }
    let min = radii.iter().cloned().fold(f64::INFINITY, f64::min);
    let alpha_floor = min / (-4.0 * tau.ln()).sqrt();
    let q2 = median(radii);
    if !(q2 > alpha_floor) {
        return Err(TrainError::DegeneratePrior { q2, alpha_floor, tau });
    }
    let rho = 4.0 * q2 / ((q2 - alpha_floor) * (q2 - alpha_floor));
    Ok(BandwidthPrior {
        shape: rho * q2 + 1.0,
        rate: rho,
        q2,
        alpha_floor,
        rho,
        tau,
    })
}

fn median(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let m = v.len() / 2;
    if v.len() % 2 == 1 {
        v[m]
    } else {
        0.5 * (v[m - 1] + v[m])
    }
}

/// Normal distribution with given mode and variance, truncated to `(0, ∞)`.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct TruncatedNormal {
    pub mode: f64,
    pub variance: f64,
}

impl TruncatedNormal {
    pub fn log_density(&self, x: f64) -> f64 {
        let sd = self.variance.sqrt();
        let mass = 1.0 - NormalDist::new(self.mode, sd).unwrap().cdf(0.0);
        -0.5 * (x - self.mode).powi(2) / self.variance - 0.5 * (2.0 * std::f64::consts::PI * self.variance).ln()
            - mass.ln()
    }

    pub fn d_log_density_d_log_x(&self, x: f64) -> f64 {
        -x * (x - self.mode) / self.variance
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let normal = Normal::new(self.mode, self.variance.sqrt()).unwrap();
        loop {
            let x: f64 = normal.sample(rng);
            if x > 0.0 {
                return x;
            }
        }
    }
}

/// Priors of the MAP objective. `κ` has an improper flat prior.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct PriorSpec {
    pub alpha: Option<BandwidthPrior>,
    pub sigma2: Option<TruncatedNormal>,
    pub noise2: Option<TruncatedNormal>,
    /// Starting length scale for every restart.
    pub kappa_init: f64,
}

impl PriorSpec {
    /// The default priors: the fitted bandwidth gamma, `σ²` around 1 and `σ_ε²`
    /// around 0, both with variance 1/9.
    pub fn standard(alpha: BandwidthPrior) -> Self {
        Self {
            alpha: Some(alpha),
            sigma2: Some(TruncatedNormal { mode: 1.0, variance: 1.0 / 9.0 }),
            noise2: Some(TruncatedNormal { mode: 0.0, variance: 1.0 / 9.0 }),
            kappa_init: alpha.q2,
        }
    }

    pub fn flat(kappa_init: f64) -> Self {
        Self { alpha: None, sigma2: None, noise2: None, kappa_init }
    }

    pub fn with_noise_variance(mut self, variance: f64) -> Self {
        self.noise2 = Some(TruncatedNormal { mode: 0.0, variance });
        self
    }

    /// Log prior density. The noise term is included only when `noisy`.
    pub fn log_prior(&self, p: &HyperParams, noisy: bool) -> f64 {
        let mut acc = 0.0;
        if let Some(a) = &self.alpha {
            acc += a.log_density(p.alpha);
        }
        if let Some(s) = &self.sigma2 {
            acc += s.log_density(p.sigma2);
        }
        if noisy {
            if let Some(s) = &self.noise2 {
                acc += s.log_density(p.noise2);
            }
        }
        acc
    }

    /// Gradient of [`Self::log_prior`] over `(log α, log κ, log σ², log σ_ε²)`.
    pub fn grad_log_prior(&self, p: &HyperParams, noisy: bool) -> [f64; 4] {
        let mut g = [0.0; 4];
        if let Some(a) = &self.alpha {
            g[0] = a.d_log_density_d_log_alpha(p.alpha);
        }
        if let Some(s) = &self.sigma2 {
            g[2] = s.d_log_density_d_log_x(p.sigma2);
        }
        if noisy {
            if let Some(s) = &self.noise2 {
                g[3] = s.d_log_density_d_log_x(p.noise2);
            }
        }
        g
    }

    /// Draws a starting point: priors where they exist, modes otherwise.
    pub fn sample_init<R: Rng + ?Sized>(&self, template: &HyperParams, noisy: bool, rng: &mut R) -> HyperParams {
        let alpha = match &self.alpha {
            Some(a) => GammaSampler::new(a.shape, 1.0 / a.rate).unwrap().sample(rng),
            None => template.alpha,
        };
        let sigma2 = self.sigma2.map_or(template.sigma2, |s| s.sample(rng));
        let noise2 = if noisy {
            self.noise2.map_or(template.noise2, |s| s.sample(rng))
        } else {
            0.0
        };
        HyperParams {
            alpha,
            kappa: self.kappa_init,
            sigma2,
            noise2,
            ..*template
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::PointSet;
    use crate::linalg::finite_diff_gradient;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use std::sync::Arc;

    #[test]
    fn hand_arithmetic() {
        let prior = bandwidth_prior_from_radii(&[2.0], (-1.0f64).exp()).unwrap();
        assert!((prior.alpha_floor - 1.0).abs() < 1e-15);
        assert_eq!(prior.q2, 2.0);
        assert!((prior.rho - 8.0).abs() < 1e-12);
        assert!((prior.shape - 17.0).abs() < 1e-12);
        assert!((prior.rate - 8.0).abs() < 1e-12);
        assert!((prior.mode() - 2.0).abs() < 1e-12);
    }

    #[test]
    fn degenerate_when_median_below_floor() {
        let err = bandwidth_prior_from_radii(&[1.0, 1.0, 1.0], 0.9).unwrap_err();
        assert!(matches!(err, TrainError::DegeneratePrior { .. }));
    }

    #[test]
    fn mode_is_median_on_generated_cloud() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let data: Vec<f64> = (0..400).map(|_| rng.random_range(-1.0..1.0)).collect();
        let index = KnnIndex::new(Arc::new(PointSet::new(data, 2).unwrap()), 5).unwrap();
        let prior = bandwidth_prior_fit(&index, 0.01).unwrap();
        assert!((prior.mode() - prior.q2).abs() < 1e-12 * prior.q2);
        assert!(prior.prob_above_floor() >= 0.9, "{}", prior.prob_above_floor());
    }

    #[test]
    fn prior_modes_maximize() {
        let prior = bandwidth_prior_from_radii(&[0.5, 1.0, 1.0, 1.5, 2.0], 0.01).unwrap();
        let spec = PriorSpec::standard(prior);
        let at = |alpha: f64, sigma2: f64| {
            spec.log_prior(&HyperParams { alpha, sigma2, ..Default::default() }, false)
        };
        let best = at(prior.q2, 1.0);
        for eps in [0.9, 1.1, 0.99, 1.01] {
            assert!(at(prior.q2 * eps, 1.0) < best);
            assert!(at(prior.q2, eps) < best);
        }
    }

    #[test]
    fn truncated_normal_integrates_to_one() {
        let t = TruncatedNormal { mode: 0.0, variance: 1.0 / 9.0 };
        let h = 1e-4;
        let total: f64 = (0..40_000).map(|i| t.log_density((i as f64 + 0.5) * h).exp() * h).sum();
        assert!((total - 1.0).abs() < 1e-6);
    }

    proptest! {
        #[test]
        fn gradient_matches_finite_differences(la in -2.0f64..1.0, ls in -2.0f64..1.0, ln in -5.0f64..0.0) {
            let prior = bandwidth_prior_from_radii(&[0.2, 0.4, 0.5, 0.6, 0.9], 0.01).unwrap();
            let spec = PriorSpec::standard(prior);
            let base = HyperParams::default();
            let theta = [la, 0.0, ls, ln];
            let f = |t: &[f64]| spec.log_prior(&base.with_log_vector(&[t[0], t[1], t[2], t[3]]), true);
            let fd = finite_diff_gradient(f, &theta, 1e-6);
            let g = spec.grad_log_prior(&base.with_log_vector(&theta), true);
            for c in 0..4 {
                prop_assert!((fd[c] - g[c]).abs() <= 1e-6 * fd[c].abs().max(1.0), "{} {} {}", c, fd[c], g[c]);
            }
        }
    }
}
