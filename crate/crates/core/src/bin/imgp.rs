use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use imgp::experiment::{
    ablate, export_csv, fit_model, gen_circle, gen_dumbbell, load_dataset, predict_from_checkpoint, run_experiment,
    write_ablation_csv, AblationAxis, DatasetSource, ExperimentConfig, ExperimentError,
    LabeledSpec, ModelKind, RunOutput,
};
use imgp::graph::PointCloud;
use imgp::train::Checkpoint;

#[derive(Parser)]
#[command(name = "imgp", version, about = "Gaussian process regression on implicit manifolds")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Fit, predict on the test set and score.
    Run(Overrides),
    /// Fit only; writes checkpoint.json to --out.
    Fit(Overrides),
    /// Predict with a saved checkpoint.
    Predict {
        #[arg(long)]
        checkpoint: PathBuf,
        #[command(flatten)]
        overrides: Overrides,
    },
    /// Sweep one setting and tabulate RMSE and NLL.
    Ablate {
        #[arg(long, value_enum)]
        axis: AblationAxis,
        /// Comma-separated grid values.
        #[arg(long, value_delimiter = ',', required = true)]
        grid: Vec<f64>,
        #[command(flatten)]
        overrides: Overrides,
    },
    /// Write a synthetic dataset as CSV.
    Generate {
        #[arg(value_enum)]
        shape: Shape,
        #[arg(long, default_value_t = 1556)]
        points: usize,
        #[arg(long, default_value_t = 0.0)]
        beta: f64,
        #[arg(long, default_value = "10")]
        labeled: LabeledSpec,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
        /// Also write the noiseless test mesh with its true values.
        #[arg(long)]
        mesh: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Shape {
    Dumbbell,
    Circle,
}

#[derive(Clone, Copy, ValueEnum)]
enum OnOff {
    On,
    Off,
}

#[derive(Args, Clone, Default)]
struct Overrides {
    /// JSON experiment config; flags below override its fields.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Training CSV (`x1,…,xd[,y]`) instead of generated data.
    #[arg(long)]
    data: Option<PathBuf>,
    /// Test CSV scored against its `y` column.
    #[arg(long)]
    test: Option<PathBuf>,
    #[arg(long)]
    points: Option<usize>,
    #[arg(long)]
    nu: Option<u32>,
    #[arg(long)]
    knn: Option<usize>,
    #[arg(long)]
    eigenpairs: Option<usize>,
    #[arg(long)]
    iters: Option<usize>,
    #[arg(long)]
    lr: Option<f64>,
    #[arg(long)]
    beta: Option<f64>,
    /// Count (`10`), fraction (`0.1`) or percentage (`10%`).
    #[arg(long)]
    labeled: Option<LabeledSpec>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, value_enum)]
    model: Option<ModelKind>,
    #[arg(long)]
    tau: Option<f64>,
    #[arg(long, value_enum)]
    blend: Option<OnOff>,
    #[arg(long)]
    out: Option<PathBuf>,
}

impl Overrides {
    fn config(&self) -> Result<ExperimentConfig, ExperimentError> {
        let mut c = match &self.config {
            Some(p) => ExperimentConfig::from_json_file(p)?,
            None => ExperimentConfig::default(),
        };
        if let Some(path) = &self.data {
            c.dataset = DatasetSource::Csv { path: path.clone(), test_path: self.test.clone() };
        } else if self.test.is_some() {
            return Err(ExperimentError::Config("--test needs --data".into()));
        }
        if let Some(n) = self.points {
            match &mut c.dataset {
                DatasetSource::Dumbbell { points } | DatasetSource::Circle { points } => *points = n,
                DatasetSource::Csv { .. } => return Err(ExperimentError::Config("--points has no effect on CSV data".into())),
            }
        }
        macro_rules! set {
            ($($field:ident => $target:expr),* $(,)?) => { $( if let Some(v) = self.$field.clone() { $target = v; } )* };
        }
        set!(nu => c.nu, knn => c.knn, eigenpairs => c.eigenpairs, iters => c.train.iters, lr => c.train.learning_rate,
             beta => c.beta, labeled => c.labeled, seed => c.seed, model => c.model, tau => c.tau);
        if let Some(b) = self.blend {
            c.blend = matches!(b, OnOff::On);
        }
        if let Some(o) = &self.out {
            c.out_dir = Some(o.clone());
        }
        c.validate()?;
        Ok(c)
    }
}

fn summarize(out: &RunOutput) {
    let r = &out.report;
    let fmt = |v: Option<f64>| v.map_or("n/a".to_string(), |x| format!("{x:.6}"));
    println!("rmse {}  nll {}  test points {}", fmt(r.rmse), fmt(r.nll), r.n_test);
    if let Some(p) = r.params {
        println!(
            "alpha {:.6}  kappa {:.6}  sigma2 {:.6}  noise2 {:.3e}  (nu {}, knn {}, eigenpairs {})",
            p.alpha, p.kappa, p.sigma2, p.noise2, p.nu, p.knn, p.eigenpairs
        );
    }
    let s = r.stage_seconds;
    println!("seconds: knn {:.2}  fit {:.2}  eig {:.2}  predict {:.2}", s.knn, s.fit, s.eig, s.predict);
    for w in &r.warnings {
        eprintln!("warning: {w}");
    }
}

fn execute(cli: Cli) -> Result<(), ExperimentError> {
    match cli.command {
        Command::Run(o) => summarize(&run_experiment(&o.config()?)?),
        Command::Fit(o) => {
            let config = o.config()?;
            let Some(dir) = config.out_dir.clone() else {
                return Err(ExperimentError::Config("fit needs --out".into()));
            };
            let data = load_dataset(&config)?;
            let model = fit_model(&config, &data.cloud)?;
            let cp = model
                .checkpoint
                .ok_or_else(|| ExperimentError::Config("the euclidean model has no checkpoint".into()))?;
            std::fs::create_dir_all(&dir)?;
            cp.save(dir.join("checkpoint.json"))?;
            println!("wrote {}", dir.join("checkpoint.json").display());
        }
        Command::Predict { checkpoint, overrides } => {
            let cp = Checkpoint::load(&checkpoint)?;
            let mut config = overrides.config()?;
            config.nu = cp.params.nu;
            config.knn = cp.params.knn;
            config.eigenpairs = cp.params.eigenpairs;
            summarize(&predict_from_checkpoint(&config, &cp)?);
        }
        Command::Ablate { axis, grid, overrides } => {
            let config = overrides.config()?;
            let rows = ablate(&config, axis, &grid)?;
            println!("{:>12} {:>12} {:>12} {:>9}", axis.name(), "rmse", "nll", "seconds");
            for r in &rows {
                let fmt = |v: Option<f64>| v.map_or("n/a".to_string(), |x| format!("{x:.6}"));
                println!("{:>12} {:>12} {:>12} {:>9.2}", r.value, fmt(r.rmse), fmt(r.nll), r.seconds);
                if let Some(e) = &r.error {
                    eprintln!("  {}: {e}", r.value);
                }
            }
            if let Some(dir) = &config.out_dir {
                std::fs::create_dir_all(dir)?;
                write_ablation_csv(dir.join("ablation.csv"), axis, &rows)?;
            }
        }
        Command::Generate { shape, points, beta, labeled, seed, out, mesh } => {
            let n_labeled = labeled.count(points);
            let (cloud, mesh_data) = match shape {
                Shape::Dumbbell => {
                    let ds = gen_dumbbell(points, beta, n_labeled, seed)?;
                    (ds.cloud, Some((ds.test_points, ds.test_truth.unwrap_or_default())))
                }
                Shape::Circle => (PointCloud::unlabeled(gen_circle(points, 1.0, seed)?), None),
            };
            export_csv(&cloud, &out)?;
            println!("wrote {} ({} points, {} labeled)", out.display(), cloud.len(), cloud.num_labeled());
            if let (Some(path), Some((pts, truth))) = (mesh, mesh_data) {
                let cloud = PointCloud::new(pts, (0..truth.len()).collect(), truth)?;
                export_csv(&cloud, &path)?;
                println!("wrote {}", path.display());
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    imgp::configure_threads();
    let cli = Cli::parse();
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
