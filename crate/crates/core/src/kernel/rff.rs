use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

/// Random Fourier features for the squared-exponential kernel
/// `σ² exp(-|x - y|² / (2κ²))`.
///
/// Each sampled frequency contributes a cosine and a sine feature, so
/// `φ(x)ᵀφ(x) = σ²` exactly.
#[derive(Debug, Clone)]
pub struct RandomFourierFeatures {
    dim: usize,
    /// `frequencies x dim`, row-major, already divided by `κ`.
    omegas: Vec<f64>,
    amplitude: f64,
}

impl RandomFourierFeatures {
    /// `n_features` is rounded up to an even count.
    pub fn new(dim: usize, n_features: usize, kappa: f64, sigma2: f64, seed: u64) -> Self {
        let freqs = n_features.div_ceil(2).max(1);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let omegas = (0..freqs * dim)
            .map(|_| {
                let z: f64 = StandardNormal.sample(&mut rng);
                z / kappa
            })
            .collect();
        Self {
            dim,
            omegas,
            amplitude: (sigma2 / freqs as f64).sqrt(),
        }
    }

    pub fn len(&self) -> usize {
        2 * self.omegas.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.omegas.is_empty()
    }

    pub fn features(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.dim);
        let freqs = self.len() / 2;
        let mut out = vec![0.0; 2 * freqs];
        for f in 0..freqs {
            let w = &self.omegas[f * self.dim..(f + 1) * self.dim];
            let t: f64 = w.iter().zip(x).map(|(a, b)| a * b).sum();
            out[f] = self.amplitude * t.cos();
            out[freqs + f] = self.amplitude * t.sin();
        }
        out
    }
}
