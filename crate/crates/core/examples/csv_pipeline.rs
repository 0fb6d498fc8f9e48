//! File-based workflow: export a labeled point cloud as CSV, train from the
//! CSV, save a checkpoint, and predict again from the checkpoint without
//! retraining. Files go to a temporary directory.
//!
//! cargo run --release --example csv_pipeline

use imgp::experiment::{export_csv, gen_dumbbell, predict_from_checkpoint, run_experiment, DatasetSource, ExperimentConfig};
use imgp::graph::PointCloud;
use imgp::train::Checkpoint;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    imgp::configure_threads();
    let dir = std::env::temp_dir().join(format!("imgp-csv-pipeline-{}", std::process::id()));
    std::fs::create_dir_all(&dir)?;

    let data = gen_dumbbell(1556, 0.01, 15, 2)?;
    let train = dir.join("train.csv");
    let test = dir.join("test.csv");
    export_csv(&data.cloud, &train)?;
    let truth = data.test_truth.clone().ok_or("no truth")?;
    export_csv(&PointCloud::new(data.test_points.clone(), (0..truth.len()).collect(), truth)?, &test)?;
    println!("wrote {} and {}", train.display(), test.display());

    let config = ExperimentConfig {
        dataset: DatasetSource::Csv { path: train, test_path: Some(test) },
        out_dir: Some(dir.join("run")),
        ..Default::default()
    };
    let first = run_experiment(&config)?;
    println!("trained: RMSE {:.4}  NLL {:.4}", first.report.rmse.unwrap(), first.report.nll.unwrap());
    for entry in std::fs::read_dir(dir.join("run"))? {
        println!("  {}", entry?.path().display());
    }

    let checkpoint = Checkpoint::load(dir.join("run").join("checkpoint.json"))?;
    let again = predict_from_checkpoint(&ExperimentConfig { out_dir: None, ..config }, &checkpoint)?;
    let same = first.predictions == again.predictions;
    println!(
        "from checkpoint: RMSE {:.4}  NLL {:.4}  (fit stage {:.2}s, identical predictions: {same})",
        again.report.rmse.unwrap(),
        again.report.nll.unwrap(),
        again.report.stage_seconds.fit
    );
    std::fs::remove_dir_all(&dir)?;
    Ok(())
}
