//! End-to-end acceptance checks. Prints one PASS/FAIL line per criterion and
//! exits non-zero when any criterion fails.

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::sync::Arc;
use std::time::Instant;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use imgp::experiment::{ablate, gen_circle, gen_dumbbell, run_experiment, AblationAxis, ExperimentConfig, LabeledSpec, ModelKind};
use imgp::graph::{build_graph, EigenConfig, EigenSolver, GraphPattern, KnnIndex, LaplacianKind, PointSet, SparseGraph};
use imgp::kernel::{GraphPrecision, HyperParams, SpectralKernel};
use imgp::linalg::{dense_smallest_eigenpairs, finite_diff_gradient, to_dense, CgConfig, EigenBasis, LanczosConfig};
use imgp::predict::{GeometricPosterior, NystromExtension};
use imgp::train::{
    bandwidth_prior_fit, bandwidth_prior_from_radii, grad_log_likelihood, log_likelihood, LogDetMethod, PrecisionOp,
    PrecisionOptions, TraceProbes,
};

type Outcome = Result<String, String>;

fn random_cloud(n: usize, dim: usize, seed: u64) -> Arc<PointSet> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let data = (0..n * dim).map(|_| rng.random_range(-1.0..1.0)).collect();
    Arc::new(PointSet::new(data, dim).unwrap())
}

fn dense_eigen() -> EigenConfig {
    EigenConfig { solver: EigenSolver::Dense, ..Default::default() }
}

fn exact_opts() -> PrecisionOptions {
    PrecisionOptions { inner_cg: CgConfig::with_tol(1e-13), normalization: None }
}

fn full_kernel(graph: &SparseGraph, params: HyperParams) -> DMatrix<f64> {
    let basis = graph.eigenbasis(graph.len(), &dense_eigen()).unwrap();
    SpectralKernel::new(basis, params, 1.0).gram()
}

fn submatrix(m: &DMatrix<f64>, idx: &[usize]) -> DMatrix<f64> {
    DMatrix::from_fn(idx.len(), idx.len(), |i, j| m[(idx[i], idx[j])])
}

fn max_identity_deviation(m: &DMatrix<f64>) -> f64 {
    (m - DMatrix::identity(m.nrows(), m.ncols())).abs().max()
}

fn inverse_equivalence() -> Outcome {
    let mut worst = 0.0f64;
    for &n in &[20usize, 100] {
        for nu in 1..=3u32 {
            let index = KnnIndex::new(random_cloud(n, 2, 100 + n as u64 + nu as u64), 6).unwrap();
            let graph = build_graph(&index, 0.3).unwrap();
            let params = HyperParams { alpha: 0.3, kappa: 1.0, sigma2: 1.0, nu, ..Default::default() };
            let k = full_kernel(&graph, params);
            let p = to_dense(&GraphPrecision::new(&graph, &params, 1.0));
            worst = worst.max(max_identity_deviation(&(k * p)));
        }
    }
    let detail = format!("max |K P - I| = {worst:.2e} (limit 1e-6)");
    if worst < 1e-6 { Ok(detail) } else { Err(detail) }
}

fn gradient_check() -> Outcome {
    let mut worst = 0.0f64;
    let cases: [(usize, usize, f64, &str); 3] =
        [(30, 30, 0.0, "supervised"), (40, 12, 0.0, "schur"), (30, 10, 1e-3, "taylor")];
    for &(n, n_labeled, noise2, mode) in &cases {
        for nu in 1..=2u32 {
            let pattern = Arc::new(GraphPattern::from_index(
                &KnnIndex::new(random_cloud(n, 2, 200 + n as u64 + nu as u64), 5).unwrap(),
            ));
            let labeled: Vec<usize> = (0..n).step_by(n / n_labeled).take(n_labeled).collect();
            let y: Vec<f64> = labeled.iter().map(|&i| (0.9 * i as f64).sin() + 0.2).collect();
            let noisy = noise2 > 0.0;
            let base = HyperParams { alpha: 0.4, kappa: 0.8, sigma2: 1.3, noise2, nu, ..Default::default() };
            let objective = |theta: &[f64]| {
                let q = base.with_log_vector(&[theta[0], theta[1], theta[2], theta[3]]);
                let g = pattern.with_bandwidth(q.alpha).unwrap();
                let op = PrecisionOp::new(&g, &q, &labeled, noisy, &exact_opts()).unwrap();
                log_likelihood(&op, &y, &LogDetMethod::Dense).unwrap()
            };
            let graph = pattern.with_bandwidth(base.alpha).unwrap();
            let op = PrecisionOp::new(&graph, &base, &labeled, noisy, &exact_opts()).unwrap();
            let analytic = grad_log_likelihood(&op, &y, &TraceProbes::Exhaustive, &CgConfig::with_tol(1e-13)).unwrap();
            let fd = finite_diff_gradient(objective, &base.log_vector(), 1e-5);
            for c in 0..if noisy { 4 } else { 3 } {
                let rel = (analytic[c] - fd[c]).abs() / fd[c].abs().max(1e-8);
                if rel >= 1e-4 {
                    return Err(format!("{mode} nu={nu} coordinate {c}: {} vs {} (rel {rel:.2e})", analytic[c], fd[c]));
                }
                worst = worst.max(rel);
            }
        }
    }
    Ok(format!("worst relative error {worst:.2e} over 3 modes x nu in {{1,2}} (limit 1e-4)"))
}

fn schur_complement() -> Outcome {
    let index = KnnIndex::new(random_cloud(40, 2, 300), 6).unwrap();
    let graph = build_graph(&index, 0.3).unwrap();
    let params = HyperParams { alpha: 0.3, kappa: 0.9, sigma2: 1.1, nu: 2, ..Default::default() };
    let labeled: Vec<usize> = (0..40).step_by(2).take(15).collect();
    let op = PrecisionOp::new(&graph, &params, &labeled, false, &exact_opts()).unwrap();
    let kzz = submatrix(&full_kernel(&graph, params), &labeled);
    let dev = max_identity_deviation(&(kzz * to_dense(&op)));
    let detail = format!("max |K_ZZ P_ZZ - I| = {dev:.2e} (limit 1e-6)");
    if dev < 1e-6 { Ok(detail) } else { Err(detail) }
}

fn taylor_remainder() -> Outcome {
    let index = KnnIndex::new(random_cloud(30, 2, 400), 5).unwrap();
    let graph = build_graph(&index, 0.35).unwrap();
    let base = HyperParams { alpha: 0.35, kappa: 1.0, sigma2: 1.0, nu: 1, ..Default::default() };
    let labeled: Vec<usize> = (0..30).step_by(3).collect();
    let kzz = submatrix(&full_kernel(&graph, base), &labeled);
    let s_max = 1.0 / kzz.clone().symmetric_eigen().eigenvalues.min();
    let error = |sigma: f64| {
        let params = HyperParams { noise2: sigma * sigma, ..base };
        let op = PrecisionOp::new(&graph, &params, &labeled, true, &exact_opts()).unwrap();
        let exact = (&kzz + DMatrix::identity(labeled.len(), labeled.len()) * sigma * sigma).try_inverse().unwrap();
        (to_dense(&op) - exact).abs().max()
    };
    let sigma = (0.05 / s_max).sqrt();
    let ratio = error(sigma) / error(sigma / 2.0);
    let detail = format!("error ratio {ratio:.3} when halving sigma_eps = {sigma:.3e} (range [12, 20])");
    if (12.0..=20.0).contains(&ratio) { Ok(detail) } else { Err(detail) }
}

fn lanczos_fidelity() -> Outcome {
    let index = KnnIndex::new(random_cloud(500, 2, 500), 10).unwrap();
    let graph = build_graph(&index, 0.05).unwrap();
    let cfg = EigenConfig { solver: EigenSolver::Lanczos, lanczos: LanczosConfig::default(), ..Default::default() };
    let basis = graph.eigenbasis(20, &cfg).map_err(|e| e.to_string())?;
    let dense = dense_smallest_eigenpairs(&to_dense(&graph.laplacian(LaplacianKind::Symmetric)), 20).unwrap();
    // λ₀ is zero in exact arithmetic, so a relative error is undefined there
    let null = basis.eigenvalues[0].abs().max(dense.values[0].abs());
    let mut worst = 0.0f64;
    for (a, b) in basis.eigenvalues.iter().zip(&dense.values).skip(1) {
        worst = worst.max((a - b).abs() / b.abs());
    }
    let ortho = basis.orthonormality_residual();
    let detail = format!(
        "eigenvalue rel error {worst:.2e} (limit 1e-8), |lambda0| {null:.1e} (limit 1e-12), D-orthonormality residual {ortho:.2e} (limit 1e-8)"
    );
    if worst < 1e-8 && null < 1e-12 && ortho < 1e-8 { Ok(detail) } else { Err(detail) }
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    let m = v.len() / 2;
    if v.len() % 2 == 1 { v[m] } else { 0.5 * (v[m - 1] + v[m]) }
}

/// Independent uniform samples occasionally leave an angular gap wider than
/// the K-NN reach, which cuts (or nearly cuts) the circle into an arc; the
/// ratios are therefore summarized by their median over 20 draws.
fn spectral_convergence() -> Outcome {
    let draws: Vec<Result<(f64, f64, f64), String>> = (0..20u64)
        .into_par_iter()
        .map(|seed| {
            let index = KnnIndex::new(Arc::new(gen_circle(2000, 1.0, seed).unwrap()), 10).unwrap();
            let prior = bandwidth_prior_fit(&index, 0.01).map_err(|e| e.to_string())?;
            let graph = build_graph(&index, prior.mode()).unwrap();
            let l = graph.eigenbasis(5, &EigenConfig::default()).map_err(|e| e.to_string())?.eigenvalues;
            Ok((l[3] / l[1], l[4] / l[2], prior.mode()))
        })
        .collect();
    let draws: Vec<(f64, f64, f64)> = draws.into_iter().collect::<Result<_, _>>()?;
    let off = draws.iter().filter(|(a, b, _)| (a - 4.0).abs() > 0.4 || (b - 4.0).abs() > 0.4).count();
    let r1 = median(draws.iter().map(|d| d.0).collect());
    let r2 = median(draws.iter().map(|d| d.1).collect());
    let alpha = median(draws.iter().map(|d| d.2).collect());
    let detail = format!(
        "median over 20 draws (alpha ~ {alpha:.4}): lambda3/lambda1 = {r1:.4}, lambda4/lambda2 = {r2:.4} (target 4 +- 10%); {off} draws individually outside"
    );
    if (r1 - 4.0).abs() <= 0.4 && (r2 - 4.0).abs() <= 0.4 { Ok(detail) } else { Err(detail) }
}

fn nystrom_reproduction() -> Outcome {
    let data = gen_dumbbell(1556, 0.0, 10, 0).unwrap();
    let index = KnnIndex::new(data.cloud.points().clone(), 10).unwrap();
    let graph = build_graph(&index, 0.06).unwrap();
    let basis = graph.eigenbasis(50, &EigenConfig::default()).map_err(|e| e.to_string())?;
    let reference: EigenBasis = basis.clone();
    let ext = NystromExtension::new(graph, basis).map_err(|e| e.to_string())?;
    let kept: Vec<usize> = (0..reference.len()).filter(|l| !ext.dropped().contains(l)).collect();
    let mut worst = 0.0f64;
    for i in 0..reference.num_nodes() {
        let f = ext.features(data.cloud.point(i)).map_err(|e| e.to_string())?;
        for (c, &l) in kept.iter().enumerate() {
            worst = worst.max((f[c] - reference.value(i, l)).abs());
        }
    }
    let detail = format!("max node error {worst:.2e} over {} nodes x {} eigenvectors (limit 1e-10)", reference.num_nodes(), kept.len());
    if worst < 1e-10 { Ok(detail) } else { Err(detail) }
}

fn prior_construction() -> Outcome {
    let data = gen_dumbbell(1556, 0.0, 10, 0).unwrap();
    let index = KnnIndex::new(data.cloud.points().clone(), 10).unwrap();
    let prior = bandwidth_prior_fit(&index, 0.01).map_err(|e| e.to_string())?;
    let mode_err = (prior.mode() - prior.q2).abs() / prior.q2;
    let hand = bandwidth_prior_from_radii(&[2.0, 3.5, 5.0, 2.7], (-1.0f64).exp()).map_err(|e| e.to_string())?;
    let mass = prior.prob_above_floor();
    let detail = format!(
        "mode {:.6} vs Q2 {:.6} (rel {mode_err:.1e}); hand case floor {:.15}; P(alpha > floor) = {mass:.4}",
        prior.mode(),
        prior.q2,
        hand.alpha_floor
    );
    if mode_err <= 1e-14 && (hand.alpha_floor - 1.0).abs() <= 1e-15 && mass >= 0.9 { Ok(detail) } else { Err(detail) }
}

fn dumbbell_config(model: ModelKind, beta: f64, seed: u64) -> ExperimentConfig {
    ExperimentConfig { model, beta, seed, labeled: LabeledSpec::Count(10), ..Default::default() }
}

fn dumbbell_ordering() -> Outcome {
    let seeds = 0..5u64;
    let mut lines = Vec::new();
    let mut ok = true;
    for &beta in &[0.0, 0.01, 0.05] {
        let (mut ir, mut inll, mut er, mut enll) = (0.0, 0.0, 0.0, 0.0);
        let mut per_seed = Vec::new();
        for seed in seeds.clone() {
            let imgp = run_experiment(&dumbbell_config(ModelKind::ImgpSemisupervised, beta, seed)).map_err(|e| e.to_string())?;
            let egp = run_experiment(&dumbbell_config(ModelKind::Euclidean, beta, seed)).map_err(|e| e.to_string())?;
            let (a, b, c, d) = (
                imgp.report.rmse.unwrap(),
                imgp.report.nll.unwrap(),
                egp.report.rmse.unwrap(),
                egp.report.nll.unwrap(),
            );
            per_seed.push(format!("s{seed} {a:.3}/{b:.3} vs {c:.3}/{d:.3}"));
            ir += a / 5.0;
            inll += b / 5.0;
            er += c / 5.0;
            enll += d / 5.0;
        }
        let pass = if beta < 0.05 { ir < er && inll < enll } else { ir <= 1.05 * er };
        ok &= pass;
        lines.push(format!(
            "    beta {beta}: mean RMSE {ir:.4} vs {er:.4}, mean NLL {inll:.4} vs {enll:.4} [{}] ({})",
            if pass { "ok" } else { "violated" },
            per_seed.join("; ")
        ));
    }
    let detail = format!("IMGP vs EGP over seeds 0-4, N=1556, n=10\n{}", lines.join("\n"));
    if ok { Ok(detail) } else { Err(detail) }
}

fn fraction_ablation() -> Outcome {
    let grid = [10.0 / 1556.0, 0.02, 0.05, 0.1];
    let run = |model| ablate(&dumbbell_config(model, 0.0, 0), AblationAxis::LabeledFraction, &grid);
    let imgp = run(ModelKind::ImgpSemisupervised).map_err(|e| e.to_string())?;
    let egp = run(ModelKind::Euclidean).map_err(|e| e.to_string())?;
    let mut gaps = Vec::new();
    for (a, b) in imgp.iter().zip(&egp) {
        match (a.nll, b.nll) {
            (Some(i), Some(e)) => gaps.push(e - i),
            _ => return Err(format!("sweep point {} failed: {:?} {:?}", a.value, a.error, b.error)),
        }
    }
    let detail = format!(
        "NLL gap (EGP - IMGP) over fractions {:?}: {:?}",
        grid.iter().map(|g| format!("{g:.4}")).collect::<Vec<_>>(),
        gaps.iter().map(|g| format!("{g:.3}")).collect::<Vec<_>>()
    );
    if gaps[0] > gaps[3] { Ok(detail) } else { Err(detail) }
}

/// Gram-space GP posterior: `K_ZZ` from the node eigenvectors, the query
/// column through Nyström features.
fn gram_posterior(ext: &NystromExtension, kernel: &SpectralKernel, labeled: &[usize], y: &[f64], x: &[f64]) -> (f64, f64) {
    let f = &ext.basis().eigenvectors;
    let fz: Vec<Vec<f64>> = labeled.iter().map(|&i| f.row(i).iter().copied().collect()).collect();
    let fx = ext.features(x).unwrap();
    let n = labeled.len();
    let kzz = DMatrix::from_fn(n, n, |i, j| kernel.eval_features(&fz[i], &fz[j]))
        + DMatrix::identity(n, n) * kernel.params.noise2;
    let kxz = DVector::from_fn(n, |i, _| kernel.eval_features(&fx, &fz[i]));
    let chol = kzz.cholesky().expect("positive definite Gram matrix");
    let mean = kxz.dot(&chol.solve(&DVector::from_column_slice(y)));
    let var = kernel.eval_features(&fx, &fx) - kxz.dot(&chol.solve(&kxz));
    (mean, var)
}

fn posterior_equivalence() -> Outcome {
    let mut worst = 0.0f64;
    let mut cases = 0;
    for (case, &(n, l, n_labeled, noise2)) in
        [(60, 60, 20, 1e-3), (120, 30, 25, 1e-2), (200, 50, 40, 0.1), (200, 200, 60, 1e-2)].iter().enumerate()
    {
        let mut rng = ChaCha8Rng::seed_from_u64(600 + case as u64);
        let data: Vec<f64> = (0..n)
            .flat_map(|_| {
                let t: f64 = rng.random_range(0.0..std::f64::consts::TAU);
                [t.cos() * (1.0 + 0.3 * (3.0 * t).sin()), t.sin()]
            })
            .collect();
        let index = KnnIndex::new(Arc::new(PointSet::new(data, 2).unwrap()), 7).unwrap();
        let graph = build_graph(&index, 0.15).unwrap();
        let basis = graph.eigenbasis(l, &EigenConfig::default()).unwrap();
        let params = HyperParams { alpha: 0.15, kappa: 1.5, sigma2: 0.8, noise2, nu: 1 + case as u32 % 2, ..Default::default() };
        let labeled: Vec<usize> = (0..n).step_by(n / n_labeled).take(n_labeled).collect();
        let y: Vec<f64> = labeled.iter().map(|&i| (2.0 * i as f64 / n as f64).sin() + rng.sample::<f64, _>(StandardNormal) * 0.05).collect();
        let post = GeometricPosterior::new(graph.clone(), basis.clone(), params, 1.0, &labeled, &y).unwrap();
        let ext = post.extension().clone();
        let kernel = SpectralKernel::new(ext.basis().clone(), params, 1.0);
        let queries: Vec<Vec<f64>> = (0..n)
            .step_by(7)
            .map(|i| graph.points().row(i).to_vec())
            .chain((0..n).step_by(5).map(|i| {
                let p = graph.points().row(i);
                vec![p[0] + rng.random_range(-0.05..0.05), p[1] + rng.random_range(-0.05..0.05)]
            }))
            .collect::<Vec<_>>()
            .into_iter()
            .chain((0..15).map(|_| vec![rng.random_range(-1.2..1.2), rng.random_range(-1.2..1.2)]))
            .collect();
        for x in &queries {
            let (m1, v1) = post.posterior(x).unwrap();
            let (m2, v2) = gram_posterior(&ext, &kernel, &labeled, &y, x);
            let scale = kernel.eval_features(&ext.features(x).unwrap(), &ext.features(x).unwrap()).max(1.0);
            worst = worst.max((m1 - m2).abs().max((v1 - v2.max(0.0)).abs()) / scale);
            cases += 1;
        }
    }
    let detail = format!("max |feature - Gram| / max(1, k(x,x)) over {cases} node, near-node and ambient queries, N <= 200: {worst:.2e} (limit 1e-8)");
    if worst < 1e-8 { Ok(detail) } else { Err(detail) }
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 11] = [
        ("precision inverts the full-spectrum kernel", inverse_equivalence),
        ("exhaustive-probe gradient matches finite differences", gradient_check),
        ("Schur complement inverts K_ZZ", schur_complement),
        ("Taylor noise expansion has a fourth-order remainder", taylor_remainder),
        ("Lanczos matches the dense eigensolver", lanczos_fidelity),
        ("circle spectrum converges to 0,1,1,4,4", spectral_convergence),
        ("Nystrom extension reproduces node values", nystrom_reproduction),
        ("bandwidth prior construction", prior_construction),
        ("dumbbell: IMGP beats the Euclidean GP", dumbbell_ordering),
        ("labeled-fraction ablation narrows the NLL gap", fraction_ablation),
        ("feature-space and Gram-space posteriors agree", posterior_equivalence),
    ];
    let only: Option<usize> = std::env::args().skip(1).find_map(|a| a.parse().ok());
    let mut failures = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let id = i + 1;
        if only.is_some_and(|o| o != id) {
            continue;
        }
        let t = Instant::now();
        let outcome = catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|e| {
            let msg = e.downcast_ref::<String>().cloned().or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()));
            Err(format!("panicked: {}", msg.unwrap_or_default()))
        });
        let secs = t.elapsed().as_secs_f64();
        match outcome {
            Ok(d) => println!("PASS {id:>2} {name} [{secs:.1}s]: {d}"),
            Err(d) => {
                failures += 1;
                println!("FAIL {id:>2} {name} [{secs:.1}s]: {d}");
            }
        }
    }
    if failures > 0 {
        println!("{failures} criteria failed");
        std::process::exit(1);
    }
}
