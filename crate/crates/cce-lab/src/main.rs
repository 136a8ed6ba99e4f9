//! Experiment driver CLI.
//!
//! Verbs: `train`, `sweep-gamma`, `make-imbalanced`, `report`. Run
//! configuration comes from flags, from a JSON file via `--config`, or
//! both (flags override file values). Failures print a machine-readable
//! `{"category", "message"}` line on stderr and map to a stable
//! nonzero exit code per category.

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand, ValueEnum};
use std::path::PathBuf;

use cce_lab::data::{generate_blobs, load_csv, load_idx, write_csv, write_idx, LabeledDataset};
use cce_lab::error::{Error, Result};
use cce_lab::harness::report::{
    comparison_table, load_results, sweep_table, write_report, write_run_files,
    write_sweep_report,
};
use cce_lab::harness::{
    load_config, run_experiment, sweep_gamma, DatasetSource, ExperimentConfig, ImbalanceSettings,
    Objective, RunResult,
};
use cce_lab::imbalance::{subsample, ImbalanceKind, ImbalanceSpec};
use cce_lab::rng::derive_seed;

#[derive(Parser)]
#[command(
    name = "cce-lab",
    version,
    about = "Training laboratory for class-imbalanced classification"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train one model under a chosen objective
    Train(TrainArgs),
    /// Train with complement cross entropy across several gamma values
    SweepGamma(SweepArgs),
    /// Subsample a dataset into an imbalanced variant on disk
    MakeImbalanced(MakeImbalancedArgs),
    /// Aggregate run result JSONs into comparison tables
    Report(ReportArgs),
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum ObjectiveArg {
    Erm,
    Focal,
    Cot,
    Cce,
}

impl From<ObjectiveArg> for Objective {
    fn from(o: ObjectiveArg) -> Self {
        match o {
            ObjectiveArg::Erm => Objective::Erm,
            ObjectiveArg::Focal => Objective::Focal,
            ObjectiveArg::Cot => Objective::Cot,
            ObjectiveArg::Cce => Objective::Cce,
        }
    }
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum DatasetArg {
    Blobs,
    Idx,
    Csv,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum ImbalanceArg {
    Lt,
    Step,
}

impl From<ImbalanceArg> for ImbalanceKind {
    fn from(k: ImbalanceArg) -> Self {
        match k {
            ImbalanceArg::Lt => ImbalanceKind::LongTailed,
            ImbalanceArg::Step => ImbalanceKind::Step,
        }
    }
}

#[derive(Args, Debug)]
struct ExperimentArgs {
    /// JSON config file; explicit flags below override its values
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, value_enum)]
    objective: Option<ObjectiveArg>,
    /// Modulating factor for the complement term (cce; must be < 0)
    #[arg(long, allow_hyphen_values = true)]
    gamma: Option<f64>,
    /// Focal loss focusing exponent
    #[arg(long)]
    focal_focus: Option<f64>,

    #[arg(long, value_enum)]
    dataset: Option<DatasetArg>,
    /// Blob classes
    #[arg(long)]
    classes: Option<usize>,
    /// Blob training samples per class (before imbalance)
    #[arg(long)]
    per_class: Option<usize>,
    /// Blob feature dimensions
    #[arg(long)]
    dims: Option<usize>,
    /// Blob class-mean circle radius
    #[arg(long)]
    separation: Option<f64>,
    /// Blob noise standard deviation
    #[arg(long)]
    noise: Option<f64>,
    /// Blob test samples per class
    #[arg(long)]
    test_per_class: Option<usize>,
    /// IDX training images file
    #[arg(long)]
    train_images: Option<PathBuf>,
    /// IDX training labels file
    #[arg(long)]
    train_labels: Option<PathBuf>,
    /// IDX test images file
    #[arg(long)]
    test_images: Option<PathBuf>,
    /// IDX test labels file
    #[arg(long)]
    test_labels: Option<PathBuf>,
    /// Labeled CSV training file
    #[arg(long)]
    train_csv: Option<PathBuf>,
    /// Labeled CSV test file
    #[arg(long)]
    test_csv: Option<PathBuf>,
    /// Label column name for CSV data
    #[arg(long)]
    label_column: Option<String>,

    /// Imbalance shape applied to the training split
    #[arg(long, value_enum)]
    imbalance: Option<ImbalanceArg>,
    /// Imbalance ratio (largest class over smallest)
    #[arg(long)]
    ratio: Option<f64>,
    /// Subsample seed (defaults to a stream derived from --seed)
    #[arg(long)]
    imbalance_seed: Option<u64>,

    #[arg(long)]
    epochs: Option<usize>,
    #[arg(long)]
    batch_size: Option<usize>,
    /// Drop the final partial batch each epoch
    #[arg(long)]
    drop_last: bool,
    /// Base learning rate
    #[arg(long)]
    lr: Option<f64>,
    #[arg(long)]
    momentum: Option<f64>,
    #[arg(long)]
    weight_decay: Option<f64>,
    #[arg(long)]
    warmup_epochs: Option<usize>,
    /// Comma-separated decay milestones (default: 60,120,160 scaled to --epochs)
    #[arg(long, value_delimiter = ',')]
    decay_epochs: Option<Vec<usize>>,
    #[arg(long)]
    decay_factor: Option<f64>,
    /// Comma-separated hidden layer widths
    #[arg(long, value_delimiter = ',')]
    hidden: Option<Vec<usize>>,
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory for result files
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct TrainArgs {
    #[command(flatten)]
    experiment: ExperimentArgs,
}

#[derive(Args, Debug)]
struct SweepArgs {
    #[command(flatten)]
    experiment: ExperimentArgs,
    /// Comma-separated negative gamma values, e.g. --gammas=-1,-5,-50
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true, required = true)]
    gammas: Vec<f64>,
}

#[derive(Args, Debug)]
struct MakeImbalancedArgs {
    #[command(flatten)]
    experiment: ExperimentArgs,
}

#[derive(Args, Debug)]
struct ReportArgs {
    /// Directory holding run result JSON files (one level of
    /// subdirectories is scanned too)
    #[arg(long)]
    runs: PathBuf,
    /// Output directory for the aggregated report
    #[arg(long)]
    out: PathBuf,
}

fn build_dataset_source(
    args: &ExperimentArgs,
    base: Option<DatasetSource>,
) -> Result<DatasetSource> {
    let chosen = match (args.dataset, &base) {
        (Some(d), _) => d,
        (None, Some(existing)) => {
            // keep the config-file dataset, applying blob knob overrides
            let mut ds = existing.clone();
            apply_blob_overrides(args, &mut ds);
            return Ok(ds);
        }
        (None, None) => DatasetArg::Blobs,
    };
    let mut ds = match chosen {
        DatasetArg::Blobs => DatasetSource::Blobs {
            num_classes: 10,
            per_class: 500,
            dims: 8,
            class_separation: 3.0,
            noise_std: 1.0,
            test_per_class: 100,
        },
        DatasetArg::Idx => DatasetSource::Idx {
            train_images: args
                .train_images
                .clone()
                .ok_or_else(|| Error::Config("--dataset idx needs --train-images".to_string()))?,
            train_labels: args
                .train_labels
                .clone()
                .ok_or_else(|| Error::Config("--dataset idx needs --train-labels".to_string()))?,
            test_images: args.test_images.clone(),
            test_labels: args.test_labels.clone(),
        },
        DatasetArg::Csv => DatasetSource::Csv {
            train_path: args
                .train_csv
                .clone()
                .ok_or_else(|| Error::Config("--dataset csv needs --train-csv".to_string()))?,
            label_column: args
                .label_column
                .clone()
                .ok_or_else(|| Error::Config("--dataset csv needs --label-column".to_string()))?,
            test_path: args.test_csv.clone(),
        },
    };
    apply_blob_overrides(args, &mut ds);
    Ok(ds)
}

fn apply_blob_overrides(args: &ExperimentArgs, ds: &mut DatasetSource) {
    if let DatasetSource::Blobs {
        num_classes,
        per_class,
        dims,
        class_separation,
        noise_std,
        test_per_class,
    } = ds
    {
        if let Some(v) = args.classes {
            *num_classes = v;
        }
        if let Some(v) = args.per_class {
            *per_class = v;
        }
        if let Some(v) = args.dims {
            *dims = v;
        }
        if let Some(v) = args.separation {
            *class_separation = v;
        }
        if let Some(v) = args.noise {
            *noise_std = v;
        }
        if let Some(v) = args.test_per_class {
            *test_per_class = v;
        }
    }
}

fn build_config(args: &ExperimentArgs) -> Result<ExperimentConfig> {
    let mut cfg = match &args.config {
        Some(path) => load_config(path)?,
        None => {
            let objective = args.objective.ok_or_else(|| {
                Error::Config("--objective is required without --config".to_string())
            })?;
            ExperimentConfig {
                objective: objective.into(),
                loss: Default::default(),
                optim: Default::default(),
                batch_size: 128,
                drop_last: false,
                epochs: 200,
                hidden_dims: vec![64, 64],
                dataset: build_dataset_source(args, None)?,
                imbalance: None,
                seed: 0,
                output_dir: None,
            }
        }
    };
    if args.config.is_some() {
        if let Some(o) = args.objective {
            cfg.objective = o.into();
        }
        cfg.dataset = build_dataset_source(args, Some(cfg.dataset))?;
    }
    if let Some(g) = args.gamma {
        cfg.loss.gamma = g;
    }
    if let Some(f) = args.focal_focus {
        cfg.loss.focal_focus = f;
    }
    match (args.imbalance, args.ratio) {
        (Some(kind), Some(ratio)) => {
            cfg.imbalance = Some(ImbalanceSettings {
                kind: kind.into(),
                ratio,
                seed: args.imbalance_seed,
            });
        }
        (Some(_), None) => {
            return Err(Error::Config("--imbalance needs --ratio".to_string()));
        }
        (None, Some(_)) if cfg.imbalance.is_none() => {
            return Err(Error::Config("--ratio needs --imbalance".to_string()));
        }
        (None, Some(ratio)) => {
            if let Some(imb) = &mut cfg.imbalance {
                imb.ratio = ratio;
            }
        }
        (None, None) => {}
    }
    if let (Some(seed), Some(imb)) = (args.imbalance_seed, &mut cfg.imbalance) {
        imb.seed = Some(seed);
    }
    if let Some(v) = args.epochs {
        cfg.epochs = v;
    }
    if let Some(v) = args.batch_size {
        cfg.batch_size = v;
    }
    if args.drop_last {
        cfg.drop_last = true;
    }
    if let Some(v) = args.lr {
        cfg.optim.base_lr = v;
    }
    if let Some(v) = args.momentum {
        cfg.optim.momentum = v;
    }
    if let Some(v) = args.weight_decay {
        cfg.optim.weight_decay = v;
    }
    if let Some(v) = args.warmup_epochs {
        cfg.optim.warmup_epochs = v;
    }
    if let Some(v) = &args.decay_epochs {
        cfg.optim.decay_epochs = Some(v.clone());
    }
    if let Some(v) = args.decay_factor {
        cfg.optim.decay_factor = v;
    }
    if let Some(v) = &args.hidden {
        cfg.hidden_dims = v.clone();
    }
    if let Some(v) = args.seed {
        cfg.seed = v;
    }
    if let Some(v) = &args.out {
        cfg.output_dir = Some(v.clone());
    }
    Ok(cfg)
}

fn summary_line(result: &RunResult) -> String {
    serde_json::json!({
        "run_id": result.run_id,
        "dataset": result.dataset_label,
        "final_bacc": result.final_bacc,
        "iterations": result.iterations,
        "backward_passes": result.backward_passes,
        "mean_seconds_per_iteration": result.timing_summary,
    })
    .to_string()
}

fn cmd_train(args: TrainArgs) -> Result<()> {
    let cfg = build_config(&args.experiment)?;
    let result = run_experiment(&cfg)?;
    if let Some(dir) = &cfg.output_dir {
        write_run_files(&result, dir)?;
    }
    println!("{}", summary_line(&result));
    Ok(())
}

fn cmd_sweep(args: SweepArgs) -> Result<()> {
    let cfg = build_config(&args.experiment)?;
    let results = sweep_gamma(&cfg, &args.gammas)?;
    if let Some(dir) = &cfg.output_dir {
        write_sweep_report(&results, dir)?;
    }
    print!("{}", sweep_table(&results));
    Ok(())
}

fn load_make_imbalanced_input(args: &ExperimentArgs, seed: u64) -> Result<LabeledDataset> {
    match args.dataset.unwrap_or(DatasetArg::Blobs) {
        DatasetArg::Blobs => generate_blobs(
            args.classes.unwrap_or(10),
            args.per_class.unwrap_or(500),
            args.dims.unwrap_or(8),
            args.separation.unwrap_or(3.0),
            args.noise.unwrap_or(1.0),
            derive_seed(seed, 1),
        ),
        DatasetArg::Idx => load_idx(
            args.train_images
                .as_ref()
                .ok_or_else(|| Error::Config("--dataset idx needs --train-images".to_string()))?,
            args.train_labels
                .as_ref()
                .ok_or_else(|| Error::Config("--dataset idx needs --train-labels".to_string()))?,
        ),
        DatasetArg::Csv => load_csv(
            args.train_csv
                .as_ref()
                .ok_or_else(|| Error::Config("--dataset csv needs --train-csv".to_string()))?,
            args.label_column
                .as_deref()
                .ok_or_else(|| Error::Config("--dataset csv needs --label-column".to_string()))?,
        ),
    }
}

fn cmd_make_imbalanced(args: MakeImbalancedArgs) -> Result<()> {
    let exp = &args.experiment;
    let out = exp
        .out
        .clone()
        .ok_or_else(|| Error::Config("make-imbalanced needs --out".to_string()))?;
    let kind = exp
        .imbalance
        .ok_or_else(|| Error::Config("make-imbalanced needs --imbalance lt|step".to_string()))?;
    let ratio = exp
        .ratio
        .ok_or_else(|| Error::Config("make-imbalanced needs --ratio".to_string()))?;
    let seed = exp.seed.unwrap_or(0);
    let dataset = load_make_imbalanced_input(exp, seed)?;
    let spec = ImbalanceSpec {
        kind: kind.into(),
        ratio,
        seed: exp.imbalance_seed.unwrap_or_else(|| derive_seed(seed, 5)),
    };
    let skewed = subsample(&dataset, &spec)?;

    std::fs::create_dir_all(&out)?;
    let written: Vec<PathBuf> = match exp.dataset.unwrap_or(DatasetArg::Blobs) {
        DatasetArg::Idx => {
            let images = out.join("train_imbalanced-images.idx3-ubyte");
            let labels = out.join("train_imbalanced-labels.idx1-ubyte");
            write_idx(&skewed, &images, &labels)?;
            vec![images, labels]
        }
        _ => {
            let path = out.join("train_imbalanced.csv");
            write_csv(&skewed, &path)?;
            vec![path]
        }
    };
    let dist_path = out.join("class_distribution.csv");
    let mut buf = Vec::new();
    skewed.distribution()?.write_csv(&mut buf)?;
    std::fs::write(&dist_path, buf)?;

    println!(
        "{}",
        serde_json::json!({
            "samples": skewed.num_samples(),
            "classes": skewed.num_classes(),
            "realized_ratio": cce_lab::imbalance::measure_ratio(&skewed)?,
            "files": written.iter().chain([&dist_path]).map(|p| p.display().to_string()).collect::<Vec<_>>(),
        })
    );
    Ok(())
}

fn cmd_report(args: ReportArgs) -> Result<()> {
    let results = load_results(&args.runs)?;
    if results.is_empty() {
        return Err(Error::Config(format!(
            "no run result JSON files under {}",
            args.runs.display()
        )));
    }
    write_report(&results, &args.out)?;
    print!("{}", comparison_table(&results));
    Ok(())
}

fn exit_code(category: &str) -> i32 {
    match category {
        "config" | "invalid-parameter" | "invalid-input" | "invalid-shape" | "invalid-label"
        | "invalid-index" | "infeasible-ratio" | "insufficient-samples"
        | "invalid-distribution" | "empty-batch" | "empty-evaluation" => 2,
        "io" => 3,
        "format" | "parse" | "consistency" | "serde" => 4,
        "numeric" => 5,
        _ => 1,
    }
}

fn main() {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if e.kind() == ErrorKind::DisplayHelp || e.kind() == ErrorKind::DisplayVersion => {
            e.exit()
        }
        Err(e) => {
            eprintln!(
                "{}",
                serde_json::json!({"category": "config", "message": e.to_string()})
            );
            std::process::exit(2);
        }
    };
    let outcome = match cli.command {
        Command::Train(args) => cmd_train(args),
        Command::SweepGamma(args) => cmd_sweep(args),
        Command::MakeImbalanced(args) => cmd_make_imbalanced(args),
        Command::Report(args) => cmd_report(args),
    };
    if let Err(e) = outcome {
        let category = e.category();
        eprintln!(
            "{}",
            serde_json::json!({"category": category, "message": e.to_string()})
        );
        std::process::exit(exit_code(category));
    }
}
