//! One-dimensional sweeps on the dumbbell: number of eigenpairs, labeled
//! fraction or noise level, tabulated and written as CSV.
//!
//! cargo run --release --example ablation -- [eigenpairs|labeled-fraction|beta]

use clap::ValueEnum;
use imgp::experiment::{ablate, write_ablation_csv, AblationAxis, ExperimentConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    imgp::configure_threads();
    let name = std::env::args().nth(1).unwrap_or_else(|| "eigenpairs".into());
    let axis = AblationAxis::from_str(&name, true)?;
    let grid: Vec<f64> = match axis {
        AblationAxis::Eigenpairs => vec![10.0, 20.0, 50.0, 100.0],
        AblationAxis::LabeledFraction => vec![0.0064, 0.02, 0.05, 0.1],
        AblationAxis::Beta => vec![0.0, 0.01, 0.05],
    };
    let rows = ablate(&ExperimentConfig::default(), axis, &grid)?;
    println!("{:>16} {:>9} {:>9} {:>8}", axis.name(), "RMSE", "NLL", "seconds");
    for r in &rows {
        println!(
            "{:>16} {:>9.4} {:>9.4} {:>8.2}{}",
            r.value,
            r.rmse.unwrap_or(f64::NAN),
            r.nll.unwrap_or(f64::NAN),
            r.seconds,
            r.error.as_deref().map(|e| format!("  ({e})")).unwrap_or_default()
        );
    }
    let path = std::env::temp_dir().join(format!("imgp-ablation-{}.csv", axis.name()));
    write_ablation_csv(&path, axis, &rows)?;
    println!("table written to {}", path.display());
    Ok(())
}
