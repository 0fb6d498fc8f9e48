//! Synthetic point clouds on known curves.

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::graph::{PointCloud, PointSet};
use crate::linalg::mix_seed;

use super::ExperimentError;

/// Closed dumbbell curve: two unit circles centred at `(±2.5, 0)` joined by
/// the horizontal bars `y = ±BAR_HALF_WIDTH`, with the inner arcs between the
/// bar ends removed. Parametrized by arclength `s ∈ [0, length)`, starting at
/// the upper bar end of the left circle and running counter-clockwise.
#[derive(Debug, Clone, Copy)]
pub struct Dumbbell {
    theta0: f64,
    arc: f64,
    bar: f64,
}

pub const BAR_HALF_WIDTH: f64 = 0.25;
const CENTER: f64 = 2.5;

impl Default for Dumbbell {
    fn default() -> Self {
        let theta0 = BAR_HALF_WIDTH.asin();
        Self {
            theta0,
            arc: std::f64::consts::TAU - 2.0 * theta0,
            bar: 2.0 * CENTER - 2.0 * theta0.cos(),
        }
    }
}

impl Dumbbell {
    pub fn length(&self) -> f64 {
        2.0 * (self.arc + self.bar)
    }

    pub fn point(&self, s: f64) -> [f64; 2] {
        let s = s.rem_euclid(self.length());
        let (a, b) = (self.arc, self.bar);
        let c0 = self.theta0.cos();
        if s < a {
            let t = self.theta0 + s;
            [-CENTER + t.cos(), t.sin()]
        } else if s < a + b {
            [-CENTER + c0 + (s - a), -BAR_HALF_WIDTH]
        } else if s < 2.0 * a + b {
            let t = std::f64::consts::PI + self.theta0 + (s - a - b);
            [CENTER + t.cos(), t.sin()]
        } else {
            [CENTER - c0 - (s - 2.0 * a - b), BAR_HALF_WIDTH]
        }
    }

    /// Arclength position of the top of the left circle.
    pub fn anchor(&self) -> f64 {
        std::f64::consts::FRAC_PI_2 - self.theta0
    }

    /// Intrinsic distance along the closed curve.
    pub fn geodesic(&self, s: f64, t: f64) -> f64 {
        let l = self.length();
        let d = (s - t).rem_euclid(l);
        d.min(l - d)
    }

    /// Target function `sin(geodesic distance to the anchor)`.
    pub fn target(&self, s: f64) -> f64 {
        self.geodesic(s, self.anchor()).sin()
    }

    /// Euclidean distance from `x` to the curve.
    pub fn distance_to_curve(&self, x: &[f64]) -> f64 {
        let c0 = self.theta0.cos();
        let arc_dist = |cx: f64, keep: &dyn Fn(f64, f64) -> bool| {
            let (dx, dy) = (x[0] - cx, x[1]);
            let r = (dx * dx + dy * dy).sqrt();
            if keep(dx, dy) {
                (r - 1.0).abs()
            } else {
                f64::INFINITY
            }
        };
        let left = arc_dist(-CENTER, &|dx, dy| !(dx > 0.0 && dy.abs() < BAR_HALF_WIDTH * (dx * dx + dy * dy).sqrt()));
        let right = arc_dist(CENTER, &|dx, dy| !(dx < 0.0 && dy.abs() < BAR_HALF_WIDTH * (dx * dx + dy * dy).sqrt()));
        let lo = -CENTER + c0;
        let hi = CENTER - c0;
        let bar = |y0: f64| {
            let cx = x[0].clamp(lo, hi);
            ((x[0] - cx).powi(2) + (x[1] - y0).powi(2)).sqrt()
        };
        let ends = [[lo, BAR_HALF_WIDTH], [lo, -BAR_HALF_WIDTH], [hi, BAR_HALF_WIDTH], [hi, -BAR_HALF_WIDTH]]
            .iter()
            .map(|e| ((x[0] - e[0]).powi(2) + (x[1] - e[1]).powi(2)).sqrt())
            .fold(f64::INFINITY, f64::min);
        left.min(right).min(bar(BAR_HALF_WIDTH)).min(bar(-BAR_HALF_WIDTH)).min(ends)
    }
}

/// A generated dataset: the training cloud plus a noiseless evaluation mesh.
#[derive(Debug, Clone)]
pub struct Dataset {
    pub cloud: PointCloud,
    /// Noiseless target at every cloud node, when known.
    pub node_truth: Option<Vec<f64>>,
    pub test_points: PointSet,
    pub test_truth: Option<Vec<f64>>,
}

pub const DUMBBELL_MESH: usize = 2000;

/// `n_points` samples uniform in arclength on the [`Dumbbell`], of which
/// `n_labeled` chosen at random carry `sin(d) + N(0, β²)`; all inputs are
/// perturbed by `N(0, β² I)`. The test mesh is an even arclength grid of
/// `DUMBBELL_MESH` clean points.
pub fn gen_dumbbell(n_points: usize, beta: f64, n_labeled: usize, seed: u64) -> Result<Dataset, ExperimentError> {
    if n_points < 10 {
        return Err(ExperimentError::Config(format!("dumbbell needs at least 10 points, got {n_points}")));
    }
    if n_labeled > n_points {
        return Err(ExperimentError::Config(format!("{n_labeled} labels requested for {n_points} points")));
    }
    if !(beta >= 0.0) {
        return Err(ExperimentError::Config(format!("noise level must be nonnegative, got {beta}")));
    }
    let curve = Dumbbell::default();
    // positions and the labeled subset come from one stream and the noise
    // from another, so runs that differ only in beta share their design
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut noise_rng = ChaCha8Rng::seed_from_u64(mix_seed(seed, &[1]));
    let noise = Normal::new(0.0, beta).expect("beta checked");
    let params: Vec<f64> = (0..n_points).map(|_| rng.random_range(0.0..curve.length())).collect();
    let mut labeled: Vec<usize> = sample(&mut rng, n_points, n_labeled).into_vec();
    labeled.sort_unstable();
    let mut data = Vec::with_capacity(2 * n_points);
    for &s in &params {
        for v in curve.point(s) {
            data.push(if beta > 0.0 { v + noise.sample(&mut noise_rng) } else { v });
        }
    }
    let node_truth: Vec<f64> = params.iter().map(|&s| curve.target(s)).collect();
    let labels: Vec<f64> = labeled
        .iter()
        .map(|&i| node_truth[i] + if beta > 0.0 { noise.sample(&mut noise_rng) } else { 0.0 })
        .collect();
    let cloud = PointCloud::new(PointSet::new(data, 2)?, labeled, labels)?;
    let step = curve.length() / DUMBBELL_MESH as f64;
    let mesh: Vec<f64> = (0..DUMBBELL_MESH).map(|i| i as f64 * step).collect();
    let test_points = PointSet::new(mesh.iter().flat_map(|&s| curve.point(s)).collect(), 2)?;
    let test_truth = mesh.iter().map(|&s| curve.target(s)).collect();
    Ok(Dataset {
        cloud,
        node_truth: Some(node_truth),
        test_points,
        test_truth: Some(test_truth),
    })
}

/// `n` uniform samples on a circle of the given radius.
pub fn gen_circle(n: usize, radius: f64, seed: u64) -> Result<PointSet, ExperimentError> {
    if n < 10 {
        return Err(ExperimentError::Config(format!("circle needs at least 10 points, got {n}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let data = (0..n)
        .flat_map(|_| {
            let t: f64 = rng.random_range(0.0..std::f64::consts::TAU);
            [radius * t.cos(), radius * t.sin()]
        })
        .collect();
    Ok(PointSet::new(data, 2)?)
}

/// `n` equally spaced points on a circle, the first at angle 0.
pub fn gen_circle_equispaced(n: usize, radius: f64) -> PointSet {
    let data = (0..n)
        .flat_map(|i| {
            let t = std::f64::consts::TAU * i as f64 / n as f64;
            [radius * t.cos(), radius * t.sin()]
        })
        .collect();
    PointSet::new(data, 2).expect("nonempty")
}

/// Circle dataset with target `sin(angle)` for ablations on a second manifold.
pub fn gen_circle_dataset(n_points: usize, beta: f64, n_labeled: usize, seed: u64) -> Result<Dataset, ExperimentError> {
    let clean = gen_circle(n_points, 1.0, seed)?;
    if n_labeled > n_points {
        return Err(ExperimentError::Config(format!("{n_labeled} labels requested for {n_points} points")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0xC1C1E);
    let noise = Normal::new(0.0, beta.max(0.0)).expect("finite");
    let node_truth: Vec<f64> = (0..n_points).map(|i| clean.row(i)[1].atan2(clean.row(i)[0]).sin()).collect();
    let data = clean
        .as_slice()
        .iter()
        .map(|v| if beta > 0.0 { v + noise.sample(&mut rng) } else { *v })
        .collect();
    let mut labeled: Vec<usize> = sample(&mut rng, n_points, n_labeled).into_vec();
    labeled.sort_unstable();
    let labels = labeled
        .iter()
        .map(|&i| node_truth[i] + if beta > 0.0 { noise.sample(&mut rng) } else { 0.0 })
        .collect();
    let mesh = gen_circle_equispaced(DUMBBELL_MESH, 1.0);
    let test_truth = (0..mesh.len()).map(|i| mesh.row(i)[1].atan2(mesh.row(i)[0]).sin()).collect();
    Ok(Dataset {
        cloud: PointCloud::new(PointSet::new(data, 2)?, labeled, labels)?,
        node_truth: Some(node_truth),
        test_points: mesh,
        test_truth: Some(test_truth),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn noiseless_points_lie_on_curve() {
        let ds = gen_dumbbell(500, 0.0, 10, 1).unwrap();
        let curve = Dumbbell::default();
        for i in 0..500 {
            assert!(curve.distance_to_curve(ds.cloud.point(i)) < 1e-12);
        }
        for i in 0..ds.test_points.len() {
            assert!(curve.distance_to_curve(ds.test_points.row(i)) < 1e-12);
        }
    }

    #[test]
    fn curve_is_continuous_and_closed() {
        let c = Dumbbell::default();
        let n = 100_000;
        let h = c.length() / n as f64;
        for i in 0..=n {
            let a = c.point(i as f64 * h);
            let b = c.point((i + 1) as f64 * h);
            let step = ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)).sqrt();
            assert!(step <= h * (1.0 + 1e-9));
        }
        let top = c.point(c.anchor());
        assert!((top[0] + 2.5).abs() < 1e-15 && (top[1] - 1.0).abs() < 1e-15);
        assert_eq!(c.target(c.anchor()), 0.0);
    }

    #[test]
    fn away_from_curve_is_positive() {
        let c = Dumbbell::default();
        assert!((c.distance_to_curve(&[-2.5, 0.0]) - 1.0).abs() < 1e-12);
        assert!((c.distance_to_curve(&[0.0, 0.0]) - BAR_HALF_WIDTH).abs() < 1e-12);
    }

    #[test]
    fn labels_and_determinism() {
        let a = gen_dumbbell(100, 0.05, 12, 7).unwrap();
        let b = gen_dumbbell(100, 0.05, 12, 7).unwrap();
        assert_eq!(a.cloud.points().as_slice(), b.cloud.points().as_slice());
        assert_eq!(a.cloud.raw_labels(), b.cloud.raw_labels());
        assert_eq!(a.cloud.num_labeled(), 12);
        assert!(gen_dumbbell(9, 0.0, 1, 0).is_err());
    }

    #[test]
    fn circle_radius_and_square() {
        let c = gen_circle(300, 2.5, 3).unwrap();
        for i in 0..300 {
            let r = (c.row(i)[0].powi(2) + c.row(i)[1].powi(2)).sqrt();
            assert!((r - 2.5).abs() < 1e-12);
        }
        let sq = gen_circle_equispaced(4, 1.0);
        let want = [[1.0, 0.0], [0.0, 1.0], [-1.0, 0.0], [0.0, -1.0]];
        for (i, w) in want.iter().enumerate() {
            assert!((sq.row(i)[0] - w[0]).abs() < 1e-15 && (sq.row(i)[1] - w[1]).abs() < 1e-15);
        }
    }
}
