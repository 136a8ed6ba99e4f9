//! Experiment harness: configuration, the four training regimes, the
//! gamma sweep, and result records.
//!
//! Regimes:
//!
//! - `erm` — plain cross entropy, one backward pass per iteration;
//! - `focal` — focal loss, same loop structure as `erm`;
//! - `cot` — bi-objective training: a cross-entropy descent step, then
//!   a fresh forward pass and a balanced-complement-entropy *ascent*
//!   step with its own momentum state (two backward passes per
//!   iteration);
//! - `cce` — single-pass complement cross entropy: one forward, one
//!   combined loss, one backward, one descent step.
//!
//! Every run is deterministic for a fixed config and seed: dataset
//! generation, subsampling, weight init, and shuffling all derive
//! substreams from the run seed, and the numeric kernels keep fixed
//! reduction order regardless of thread count.

pub mod report;

use crate::data::{
    batches, generate_blobs, load_csv, load_idx, normalize, BatchPlan, LabeledDataset,
};
use crate::error::{Error, Result};
use crate::imbalance::{subsample, ImbalanceKind, ImbalanceSpec};
use crate::losses::{
    balanced_complement_entropy, complement_cross_entropy, cross_entropy, focal_loss, LossConfig,
};
use crate::metrics::ConfusionMatrix;
use crate::model::MlpModel;
use crate::optim::{lr_at, scale_milestones, SgdConfig, SgdOptimizer, StepDirection};
use crate::rng::derive_seed;
use crate::tensor::{softmax, Matrix, OneHotBatch};
use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};
use std::time::Instant;

// substream tags for deriving per-purpose seeds from the run seed
const SEED_TRAIN_DATA: u64 = 1;
const SEED_TEST_DATA: u64 = 2;
const SEED_INIT: u64 = 3;
const SEED_SHUFFLE: u64 = 4;
const SEED_IMBALANCE: u64 = 5;

const EVAL_SHARD: usize = 1024;
/// Reference epoch budget the default decay milestones are defined
/// against; shorter runs scale them proportionally.
const REFERENCE_EPOCHS: usize = 200;
const DEFAULT_MILESTONES: [usize; 3] = [60, 120, 160];

/// Training objective selector.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Objective {
    Erm,
    Focal,
    Cot,
    Cce,
}

impl Objective {
    pub fn name(self) -> &'static str {
        match self {
            Objective::Erm => "erm",
            Objective::Focal => "focal",
            Objective::Cot => "cot",
            Objective::Cce => "cce",
        }
    }
}

fn default_blob_classes() -> usize {
    10
}
fn default_blob_per_class() -> usize {
    500
}
fn default_blob_dims() -> usize {
    8
}
fn default_blob_separation() -> f64 {
    3.0
}
fn default_blob_noise() -> f64 {
    1.0
}
fn default_blob_test_per_class() -> usize {
    100
}

/// Where the training (and test) data comes from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "source", rename_all = "lowercase")]
pub enum DatasetSource {
    /// Seeded synthetic Gaussian blobs; the test split is generated
    /// balanced from an independent substream and never subsampled.
    Blobs {
        #[serde(default = "default_blob_classes")]
        num_classes: usize,
        #[serde(default = "default_blob_per_class")]
        per_class: usize,
        #[serde(default = "default_blob_dims")]
        dims: usize,
        #[serde(default = "default_blob_separation")]
        class_separation: f64,
        #[serde(default = "default_blob_noise")]
        noise_std: f64,
        #[serde(default = "default_blob_test_per_class")]
        test_per_class: usize,
    },
    /// IDX image/label file pairs.
    Idx {
        train_images: PathBuf,
        train_labels: PathBuf,
        #[serde(default)]
        test_images: Option<PathBuf>,
        #[serde(default)]
        test_labels: Option<PathBuf>,
    },
    /// Labeled CSV files.
    Csv {
        train_path: PathBuf,
        label_column: String,
        #[serde(default)]
        test_path: Option<PathBuf>,
    },
}

fn default_base_lr() -> f64 {
    0.1
}
fn default_momentum() -> f64 {
    0.9
}
fn default_weight_decay() -> f64 {
    5e-4
}
fn default_warmup() -> usize {
    5
}
fn default_decay_factor() -> f64 {
    0.5
}

/// Optimizer settings as configured; `decay_epochs: None` means the
/// default milestones scaled onto the run's epoch budget.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptimSettings {
    #[serde(default = "default_base_lr")]
    pub base_lr: f64,
    #[serde(default = "default_momentum")]
    pub momentum: f64,
    #[serde(default = "default_weight_decay")]
    pub weight_decay: f64,
    #[serde(default = "default_warmup")]
    pub warmup_epochs: usize,
    #[serde(default)]
    pub decay_epochs: Option<Vec<usize>>,
    #[serde(default = "default_decay_factor")]
    pub decay_factor: f64,
}

impl Default for OptimSettings {
    fn default() -> Self {
        OptimSettings {
            base_lr: default_base_lr(),
            momentum: default_momentum(),
            weight_decay: default_weight_decay(),
            warmup_epochs: default_warmup(),
            decay_epochs: None,
            decay_factor: default_decay_factor(),
        }
    }
}

/// Imbalance request; the subsample seed defaults to a substream of the
/// run seed when not given.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImbalanceSettings {
    pub kind: ImbalanceKind,
    pub ratio: f64,
    #[serde(default)]
    pub seed: Option<u64>,
}

fn default_batch_size() -> usize {
    128
}
fn default_epochs() -> usize {
    200
}
fn default_hidden() -> Vec<usize> {
    vec![64, 64]
}

/// Full description of one training run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub objective: Objective,
    #[serde(default)]
    pub loss: LossConfig,
    #[serde(default)]
    pub optim: OptimSettings,
    #[serde(default = "default_batch_size")]
    pub batch_size: usize,
    #[serde(default)]
    pub drop_last: bool,
    #[serde(default = "default_epochs")]
    pub epochs: usize,
    #[serde(default = "default_hidden")]
    pub hidden_dims: Vec<usize>,
    pub dataset: DatasetSource,
    #[serde(default)]
    pub imbalance: Option<ImbalanceSettings>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub output_dir: Option<PathBuf>,
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        if self.epochs == 0 {
            return Err(Error::Config("epochs must be >= 1".to_string()));
        }
        if self.batch_size == 0 {
            return Err(Error::Config("batch_size must be >= 1".to_string()));
        }
        if self.objective == Objective::Cce && self.loss.gamma >= 0.0 {
            return Err(Error::Config(format!(
                "objective cce needs gamma < 0, got {}",
                self.loss.gamma
            )));
        }
        if let Some(imb) = &self.imbalance {
            if !imb.ratio.is_finite() || imb.ratio < 1.0 {
                return Err(Error::Config(format!(
                    "imbalance ratio must be >= 1, got {}",
                    imb.ratio
                )));
            }
        }
        self.resolved_sgd().validate()
    }

    /// Optimizer config with decay milestones resolved: explicit ones
    /// pass through, otherwise the defaults are rescaled as
    /// `round(milestone * epochs / 200)`.
    pub fn resolved_sgd(&self) -> SgdConfig {
        let decay_epochs = match &self.optim.decay_epochs {
            Some(d) => d.clone(),
            None => scale_milestones(&DEFAULT_MILESTONES, self.epochs, REFERENCE_EPOCHS),
        };
        SgdConfig {
            base_lr: self.optim.base_lr,
            momentum: self.optim.momentum,
            weight_decay: self.optim.weight_decay,
            warmup_epochs: self.optim.warmup_epochs,
            decay_epochs,
            decay_factor: self.optim.decay_factor,
        }
    }

    fn imbalance_spec(&self) -> Option<ImbalanceSpec> {
        self.imbalance.as_ref().map(|s| ImbalanceSpec {
            kind: s.kind,
            ratio: s.ratio,
            seed: s
                .seed
                .unwrap_or_else(|| derive_seed(self.seed, SEED_IMBALANCE)),
        })
    }

    /// Short human-readable dataset tag, including the imbalance suffix
    /// (`blobs-lt100`, `fashion-step10`, ...).
    pub fn dataset_label(&self) -> String {
        let base = match &self.dataset {
            DatasetSource::Blobs { .. } => "blobs".to_string(),
            DatasetSource::Idx { train_images, .. } => train_images
                .file_stem()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_else(|| "idx".to_string()),
            DatasetSource::Csv { train_path, .. } => train_path
                .file_stem()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_else(|| "csv".to_string()),
        };
        match &self.imbalance {
            Some(s) => format!("{base}-{}{}", s.kind.short_name(), format_ratio(s.ratio)),
            None => base,
        }
    }

    /// Unique-enough run identifier for file naming.
    pub fn run_id(&self) -> String {
        let mut id = self.objective.name().to_string();
        match self.objective {
            Objective::Cce => id.push_str(&format!("_g{}", format_number(self.loss.gamma))),
            Objective::Focal => {
                id.push_str(&format!("_f{}", format_number(self.loss.focal_focus)))
            }
            _ => {}
        }
        format!("{id}_{}_s{}", self.dataset_label(), self.seed)
    }
}

fn format_ratio(r: f64) -> String {
    if r.fract() == 0.0 {
        format!("{}", r as i64)
    } else {
        format!("{r}")
    }
}

fn format_number(v: f64) -> String {
    let s = format!("{v}");
    s.replace('-', "m").replace('.', "p")
}

/// One epoch's record in a run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    pub train_loss: f64,
    pub test_bacc: f64,
    /// Test error in percent: `100 * (1 - top-1 accuracy)`.
    pub test_error: f64,
    pub lr: f64,
    pub epoch_wall_time: f64,
}

/// Persisted outcome of one training run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunResult {
    pub run_id: String,
    pub dataset_label: String,
    pub class_names: Vec<String>,
    pub final_bacc: f64,
    pub per_epoch: Vec<EpochRecord>,
    pub confusion: ConfusionMatrix,
    /// Mean wall-clock seconds per iteration, excluding epoch 0 as
    /// warm-up whenever the run has more than one epoch.
    pub timing_summary: f64,
    pub iterations: u64,
    pub backward_passes: u64,
    pub config_echo: ExperimentConfig,
}

fn align_test_classes(train: &LabeledDataset, test: LabeledDataset) -> Result<LabeledDataset> {
    if test.class_names() == train.class_names() {
        return Ok(test);
    }
    // re-encode test labels against the train class-name mapping
    let mut mapping = Vec::with_capacity(test.num_classes());
    for name in test.class_names() {
        let id = train
            .class_names()
            .iter()
            .position(|n| n == name)
            .ok_or_else(|| {
                Error::Consistency(format!(
                    "test class {name:?} does not appear in the training set"
                ))
            })?;
        mapping.push(id);
    }
    let labels: Vec<usize> = test.labels().labels().iter().map(|&l| mapping[l]).collect();
    LabeledDataset::with_names(
        test.name().to_string(),
        test.features().clone(),
        OneHotBatch::new(labels, train.num_classes())?,
        train.class_names().to_vec(),
        test.feature_names().to_vec(),
        test.label_name().to_string(),
    )
}

fn prepare_datasets(cfg: &ExperimentConfig) -> Result<(LabeledDataset, LabeledDataset)> {
    let (train_raw, test_raw) = match &cfg.dataset {
        DatasetSource::Blobs {
            num_classes,
            per_class,
            dims,
            class_separation,
            noise_std,
            test_per_class,
        } => {
            let train = generate_blobs(
                *num_classes,
                *per_class,
                *dims,
                *class_separation,
                *noise_std,
                derive_seed(cfg.seed, SEED_TRAIN_DATA),
            )?;
            let test = generate_blobs(
                *num_classes,
                *test_per_class,
                *dims,
                *class_separation,
                *noise_std,
                derive_seed(cfg.seed, SEED_TEST_DATA),
            )?;
            (train, test)
        }
        DatasetSource::Idx {
            train_images,
            train_labels,
            test_images,
            test_labels,
        } => {
            let train = load_idx(train_images, train_labels)?;
            let test = match (test_images, test_labels) {
                (Some(ti), Some(tl)) => load_idx(ti, tl)?,
                _ => {
                    return Err(Error::Config(
                        "idx training needs --test-images and --test-labels".to_string(),
                    ))
                }
            };
            (train, test)
        }
        DatasetSource::Csv {
            train_path,
            label_column,
            test_path,
        } => {
            let train = load_csv(train_path, label_column)?;
            let test = match test_path {
                Some(tp) => load_csv(tp, label_column)?,
                None => return Err(Error::Config("csv training needs --test-csv".to_string())),
            };
            (train, test)
        }
    };
    let test_raw = align_test_classes(&train_raw, test_raw)?;
    let train_imbalanced = match cfg.imbalance_spec() {
        Some(spec) => subsample(&train_raw, &spec)?,
        None => train_raw,
    };
    let (train, mut rest) = normalize(&train_imbalanced, &[&test_raw])?;
    Ok((train, rest.pop().expect("one normalized companion set")))
}

/// Confusion matrix plus balanced accuracy and test error (%) for a
/// dataset, evaluated in shards (parallel when enabled; counts merge in
/// shard order either way).
pub fn evaluate(model: &MlpModel, ds: &LabeledDataset) -> Result<(ConfusionMatrix, f64, f64)> {
    let n = ds.num_samples();
    if n == 0 {
        return Err(Error::EmptyEvaluation);
    }
    let ranges: Vec<(usize, usize)> = (0..n)
        .step_by(EVAL_SHARD)
        .map(|start| (start, (start + EVAL_SHARD).min(n)))
        .collect();
    let shard = |&(start, end): &(usize, usize)| -> Result<ConfusionMatrix> {
        let idx: Vec<usize> = (start..end).collect();
        let (x, y) = ds.gather(&idx)?;
        let probs = softmax(&model.predict(&x)?)?;
        let mut cm = ConfusionMatrix::new(ds.num_classes());
        cm.accumulate(&probs, &y)?;
        Ok(cm)
    };
    #[cfg(feature = "parallel")]
    let shards: Vec<Result<ConfusionMatrix>> = {
        use rayon::prelude::*;
        ranges.par_iter().map(shard).collect()
    };
    #[cfg(not(feature = "parallel"))]
    let shards: Vec<Result<ConfusionMatrix>> = ranges.iter().map(shard).collect();

    let mut cm = ConfusionMatrix::new(ds.num_classes());
    for s in shards {
        cm.merge(&s?)?;
    }
    let bacc = cm.balanced_accuracy()?;
    let err = 100.0 * (1.0 - cm.accuracy()?);
    Ok((cm, bacc, err))
}

struct StepOutcome {
    loss: f64,
    backward_passes: u64,
}

fn train_step(
    objective: Objective,
    model: &mut MlpModel,
    primary: &mut SgdOptimizer,
    secondary: &mut SgdOptimizer,
    x: &Matrix,
    y: &OneHotBatch,
    lr: f64,
    loss_cfg: &LossConfig,
) -> Result<StepOutcome> {
    match objective {
        Objective::Erm | Objective::Focal => {
            let logits = model.forward(x)?;
            let probs = softmax(&logits)?;
            let report = if objective == Objective::Erm {
                cross_entropy(&probs, y)?
            } else {
                focal_loss(&probs, y, loss_cfg)?
            };
            let grads = model.backward(&report.grad_logits)?;
            primary.step(model, &grads, lr, StepDirection::Descend)?;
            Ok(StepOutcome {
                loss: report.value,
                backward_passes: 1,
            })
        }
        Objective::Cce => {
            let logits = model.forward(x)?;
            let report = complement_cross_entropy(&logits, y, loss_cfg)?;
            let grads = model.backward(&report.grad_logits)?;
            primary.step(model, &grads, lr, StepDirection::Descend)?;
            Ok(StepOutcome {
                loss: report.value,
                backward_passes: 1,
            })
        }
        Objective::Cot => {
            // primary objective: cross-entropy descent
            let logits = model.forward(x)?;
            let probs = softmax(&logits)?;
            let ce = cross_entropy(&probs, y)?;
            let grads = model.backward(&ce.grad_logits)?;
            primary.step(model, &grads, lr, StepDirection::Descend)?;
            // complement objective at the post-step parameters: fresh
            // forward, then ascent on the balanced complement entropy
            // with independent momentum state
            let logits = model.forward(x)?;
            let probs = softmax(&logits)?;
            let comp = balanced_complement_entropy(&probs, y, loss_cfg)?;
            let grads = model.backward(&comp.grad_logits)?;
            secondary.step(model, &grads, lr, StepDirection::Ascend)?;
            Ok(StepOutcome {
                loss: ce.value,
                backward_passes: 2,
            })
        }
    }
}

fn write_partial(cfg: &ExperimentConfig, partial: &RunResult) {
    if let Some(dir) = &cfg.output_dir {
        if std::fs::create_dir_all(dir).is_ok() {
            if let Ok(json) = serde_json::to_string_pretty(partial) {
                let _ = std::fs::write(dir.join("partial_result.json"), json);
            }
        }
    }
}

/// Executes one training run to completion.
///
/// On divergence (non-finite loss or parameters) the partial result is
/// written to `output_dir/partial_result.json` when an output directory
/// is configured, and a numeric error with the failing epoch/iteration
/// is returned.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<RunResult> {
    cfg.validate()?;
    let (train, test) = prepare_datasets(cfg)?;
    let sgd = cfg.resolved_sgd();

    let mut layer_dims = vec![train.num_features()];
    layer_dims.extend_from_slice(&cfg.hidden_dims);
    layer_dims.push(train.num_classes());
    let mut model = MlpModel::new(&layer_dims, derive_seed(cfg.seed, SEED_INIT))?;
    let mut primary = SgdOptimizer::new(sgd.clone());
    let mut secondary = SgdOptimizer::new(sgd.clone());

    let plan = BatchPlan {
        batch_size: cfg.batch_size,
        shuffle_seed: derive_seed(cfg.seed, SEED_SHUFFLE),
        drop_last: cfg.drop_last,
    };

    let mut per_epoch: Vec<EpochRecord> = Vec::with_capacity(cfg.epochs);
    let mut confusion = ConfusionMatrix::new(train.num_classes());
    let mut iterations = 0u64;
    let mut backward_passes = 0u64;
    let mut timed_seconds = 0.0f64;
    let mut timed_iterations = 0u64;
    let mut warmup_seconds = 0.0f64;
    let mut warmup_iterations = 0u64;

    for epoch in 0..cfg.epochs {
        let lr = lr_at(&sgd, epoch);
        let epoch_start = Instant::now();
        let mut loss_weighted = 0.0f64;
        let mut samples_seen = 0usize;
        let mut iteration_in_epoch = 0u64;
        for (x, y) in batches(&train, &plan, epoch as u64)? {
            let iter_start = Instant::now();
            let outcome = train_step(
                cfg.objective,
                &mut model,
                &mut primary,
                &mut secondary,
                &x,
                &y,
                lr,
                &cfg.loss,
            );
            let elapsed = iter_start.elapsed().as_secs_f64();
            let outcome = match outcome {
                Ok(o) if o.loss.is_finite() => o,
                flawed => {
                    let diagnostic = match flawed {
                        Ok(o) => format!("loss diverged to {}", o.loss),
                        Err(e) => format!("run aborted: {e}"),
                    };
                    let timing_summary = timing(
                        timed_seconds,
                        timed_iterations,
                        warmup_seconds,
                        warmup_iterations,
                    );
                    let partial = finish_result(
                        cfg,
                        &train,
                        per_epoch,
                        confusion,
                        timing_summary,
                        iterations,
                        backward_passes,
                    );
                    write_partial(cfg, &partial);
                    return Err(Error::Numeric(format!(
                        "{diagnostic} at epoch {epoch}, iteration {iteration_in_epoch}"
                    )));
                }
            };
            iterations += 1;
            iteration_in_epoch += 1;
            backward_passes += outcome.backward_passes;
            if epoch == 0 {
                warmup_seconds += elapsed;
                warmup_iterations += 1;
            } else {
                timed_seconds += elapsed;
                timed_iterations += 1;
            }
            loss_weighted += outcome.loss * x.rows() as f64;
            samples_seen += x.rows();
        }
        let (cm, bacc, test_error) = match evaluate(&model, &test) {
            Ok(v) => v,
            Err(e) => {
                // the test split was validated up front, so a failure
                // here means the parameters numerically blew up
                let timing_summary = timing(
                    timed_seconds,
                    timed_iterations,
                    warmup_seconds,
                    warmup_iterations,
                );
                let partial = finish_result(
                    cfg,
                    &train,
                    per_epoch,
                    confusion,
                    timing_summary,
                    iterations,
                    backward_passes,
                );
                write_partial(cfg, &partial);
                return Err(Error::Numeric(format!(
                    "evaluation failed after epoch {epoch}: {e}"
                )));
            }
        };
        confusion = cm;
        per_epoch.push(EpochRecord {
            epoch,
            train_loss: loss_weighted / samples_seen as f64,
            test_bacc: bacc,
            test_error,
            lr,
            epoch_wall_time: epoch_start.elapsed().as_secs_f64(),
        });
    }

    let timing_summary = timing(
        timed_seconds,
        timed_iterations,
        warmup_seconds,
        warmup_iterations,
    );
    Ok(finish_result(
        cfg,
        &train,
        per_epoch,
        confusion,
        timing_summary,
        iterations,
        backward_passes,
    ))
}

fn timing(timed: f64, iters: u64, warmup: f64, warmup_iters: u64) -> f64 {
    if iters > 0 {
        timed / iters as f64
    } else if warmup_iters > 0 {
        // single-epoch runs have no post-warm-up iterations to average
        warmup / warmup_iters as f64
    } else {
        0.0
    }
}

fn finish_result(
    cfg: &ExperimentConfig,
    train: &LabeledDataset,
    per_epoch: Vec<EpochRecord>,
    confusion: ConfusionMatrix,
    timing_summary: f64,
    iterations: u64,
    backward_passes: u64,
) -> RunResult {
    let final_bacc = per_epoch.last().map(|r| r.test_bacc).unwrap_or(0.0);
    RunResult {
        run_id: cfg.run_id(),
        dataset_label: cfg.dataset_label(),
        class_names: train.class_names().to_vec(),
        final_bacc,
        per_epoch,
        confusion,
        timing_summary,
        iterations,
        backward_passes,
        config_echo: cfg.clone(),
    }
}

/// One complement-cross-entropy run per modulating factor, seeds held
/// fixed across the sweep. All factors must be negative.
pub fn sweep_gamma(base: &ExperimentConfig, gammas: &[f64]) -> Result<Vec<RunResult>> {
    if gammas.is_empty() {
        return Err(Error::Config("sweep needs at least one gamma".to_string()));
    }
    if let Some(&bad) = gammas.iter().find(|&&g| g >= 0.0) {
        return Err(Error::Config(format!(
            "sweep gammas must be negative, got {bad}"
        )));
    }
    let mut results = Vec::with_capacity(gammas.len());
    for &gamma in gammas {
        let mut cfg = base.clone();
        cfg.objective = Objective::Cce;
        cfg.loss.gamma = gamma;
        results.push(run_experiment(&cfg)?);
    }
    Ok(results)
}

/// Loads an [`ExperimentConfig`] from a JSON file.
pub fn load_config(path: &Path) -> Result<ExperimentConfig> {
    let file = std::fs::File::open(path)?;
    Ok(serde_json::from_reader(std::io::BufReader::new(file))?)
}
