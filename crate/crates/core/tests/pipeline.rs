use std::path::Path;
use std::process::Command;

use imgp::experiment::{run_experiment, DatasetSource, ExperimentConfig, LabeledSpec, ModelKind, NoiseMode};

fn small(model: ModelKind) -> ExperimentConfig {
    let mut c = ExperimentConfig {
        dataset: DatasetSource::Dumbbell { points: 400 },
        labeled: LabeledSpec::Count(12),
        model,
        seed: 5,
        ..Default::default()
    };
    c.train.iters = 30;
    c.truncated.iters = 300;
    c
}

fn metrics_without_timing(dir: &Path) -> serde_json::Value {
    let text = std::fs::read_to_string(dir.join("metrics.json")).unwrap();
    let mut v: serde_json::Value = serde_json::from_str(&text).unwrap();
    let obj = v.as_object_mut().unwrap();
    obj.remove("stage_seconds").expect("stage_seconds present");
    // both echo the output directory
    obj.remove("checkpoint");
    obj["config_echo"].as_object_mut().unwrap().remove("out_dir");
    v
}

#[test]
fn repeated_runs_write_identical_artifacts() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    for dir in [&a, &b] {
        let config = ExperimentConfig { out_dir: Some(dir.path().to_path_buf()), ..small(ModelKind::ImgpSemisupervised) };
        run_experiment(&config).unwrap();
    }
    assert_eq!(metrics_without_timing(a.path()), metrics_without_timing(b.path()));
    for file in ["predictions.csv", "checkpoint.json"] {
        assert_eq!(
            std::fs::read(a.path().join(file)).unwrap(),
            std::fs::read(b.path().join(file)).unwrap(),
            "{file} differs"
        );
    }
}

#[test]
fn every_model_scores_the_test_mesh() {
    for model in [ModelKind::ImgpSemisupervised, ModelKind::ImgpSupervised, ModelKind::Euclidean] {
        let out = run_experiment(&small(model)).unwrap();
        let r = &out.report;
        assert_eq!(r.n_points, 400);
        assert_eq!(r.n_labeled, 12);
        assert_eq!(out.predictions.len(), r.n_test);
        let rmse = r.rmse.unwrap();
        assert!(rmse.is_finite() && rmse < 1.5, "{model:?}: rmse {rmse}");
        assert!(r.nll.unwrap().is_finite());
        assert!(out.predictions.iter().all(|p| p.variance >= 0.0 && (0.0..=1.0).contains(&p.gamma)));
        assert_eq!(r.params.is_some(), model != ModelKind::Euclidean);
    }
}

#[test]
fn noisy_data_learns_observation_noise() {
    let config = ExperimentConfig { beta: 0.05, noise: NoiseMode::Auto, ..small(ModelKind::ImgpSemisupervised) };
    let out = run_experiment(&config).unwrap();
    assert!(out.report.params.unwrap().noise2 > 0.0);
}

#[test]
fn unblended_model_trusts_the_graph_everywhere() {
    let config = ExperimentConfig { blend: false, ..small(ModelKind::ImgpSemisupervised) };
    let out = run_experiment(&config).unwrap();
    assert!(out.predictions.iter().all(|p| p.gamma == 1.0));
}

fn cli(args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_imgp")).args(args).env("IMGP_THREADS", "1").output().unwrap()
}

#[test]
fn cli_generate_fit_predict() {
    let dir = tempfile::tempdir().unwrap();
    let d = |f: &str| dir.path().join(f).to_string_lossy().into_owned();
    let out = cli(&["generate", "dumbbell", "--points", "300", "--labeled", "10", "--out", &d("train.csv"), "--mesh", &d("mesh.csv")]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));

    let out = cli(&["fit", "--data", &d("train.csv"), "--iters", "20", "--out", &d("fit")]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(dir.path().join("fit/checkpoint.json").exists());

    let out = cli(&["predict", "--checkpoint", &d("fit/checkpoint.json"), "--data", &d("train.csv"), "--test", &d("mesh.csv"), "--out", &d("pred")]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let header = std::fs::read_to_string(dir.path().join("pred/predictions.csv")).unwrap();
    assert!(header.starts_with("x1,x2,mean,variance,gamma"));
    assert!(String::from_utf8_lossy(&out.stdout).contains("rmse"));
}

#[test]
fn cli_exit_codes() {
    assert_eq!(cli(&["run", "--knn", "0"]).status.code(), Some(2));
    assert_eq!(cli(&["run", "--nu", "banana"]).status.code(), Some(2));
    assert_eq!(cli(&["run", "--data", "/definitely/not/here.csv"]).status.code(), Some(4));
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.csv");
    std::fs::write(&bad, "x1,x2,y\n1,2,\n").unwrap();
    // a table without any label cannot be trained on
    let code = cli(&["run", "--data", bad.to_str().unwrap()]).status.code();
    assert!(matches!(code, Some(2) | Some(3)), "{code:?}");
}

#[test]
fn config_file_roundtrip_through_cli() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("config.json");
    let config = ExperimentConfig { model: ModelKind::Euclidean, ..small(ModelKind::Euclidean) };
    std::fs::write(&path, config.to_json()).unwrap();
    let out = cli(&["run", "--config", path.to_str().unwrap(), "--out", dir.path().join("o").to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let metrics: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("o/metrics.json")).unwrap()).unwrap();
    assert_eq!(metrics["config_echo"]["model"], "euclidean");
    assert_eq!(metrics["n_points"], 400);
}
