//! Dataset generation, ingestion, and mini-batch iteration.
//!
//! Datasets are immutable after construction. The synthetic blob
//! generator gives desk-scale experiments with controllable class
//! geometry; IDX and labeled-CSV loaders ingest files from disk.

mod csv_io;
mod idx;

pub use csv_io::{load_csv, write_csv};
pub use idx::{load_idx, write_idx};

use crate::error::{Error, Result};
use crate::imbalance::ClassDistribution;
use crate::rng::Xoshiro256pp;
use crate::tensor::{Matrix, OneHotBatch};
use serde::{Deserialize, Serialize};

/// Feature matrix plus labels and naming metadata.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledDataset {
    name: String,
    features: Matrix,
    labels: OneHotBatch,
    class_names: Vec<String>,
    feature_names: Vec<String>,
    label_name: String,
    class_counts: Vec<usize>,
}

fn indexed_names(prefix: &str, n: usize) -> Vec<String> {
    (0..n).map(|i| format!("{prefix}{i}")).collect()
}

impl LabeledDataset {
    pub fn new(name: impl Into<String>, features: Matrix, labels: OneHotBatch) -> Result<Self> {
        let k = labels.num_classes();
        let d = features.cols();
        Self::with_names(
            name,
            features,
            labels,
            indexed_names("class_", k),
            indexed_names("feature_", d),
            "label",
        )
    }

    pub fn with_names(
        name: impl Into<String>,
        features: Matrix,
        labels: OneHotBatch,
        class_names: Vec<String>,
        feature_names: Vec<String>,
        label_name: impl Into<String>,
    ) -> Result<Self> {
        if features.rows() != labels.len() {
            return Err(Error::InvalidShape(format!(
                "{} feature rows vs {} labels",
                features.rows(),
                labels.len()
            )));
        }
        if class_names.len() != labels.num_classes() {
            return Err(Error::InvalidShape(format!(
                "{} class names for {} classes",
                class_names.len(),
                labels.num_classes()
            )));
        }
        if feature_names.len() != features.cols() {
            return Err(Error::InvalidShape(format!(
                "{} feature names for {} features",
                feature_names.len(),
                features.cols()
            )));
        }
        let mut class_counts = vec![0usize; labels.num_classes()];
        for &l in labels.labels() {
            class_counts[l] += 1;
        }
        Ok(LabeledDataset {
            name: name.into(),
            features,
            labels,
            class_names,
            feature_names,
            label_name: label_name.into(),
            class_counts,
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn features(&self) -> &Matrix {
        &self.features
    }

    pub fn labels(&self) -> &OneHotBatch {
        &self.labels
    }

    pub fn num_samples(&self) -> usize {
        self.features.rows()
    }

    pub fn num_features(&self) -> usize {
        self.features.cols()
    }

    pub fn num_classes(&self) -> usize {
        self.labels.num_classes()
    }

    pub fn class_names(&self) -> &[String] {
        &self.class_names
    }

    pub fn feature_names(&self) -> &[String] {
        &self.feature_names
    }

    pub fn label_name(&self) -> &str {
        &self.label_name
    }

    /// Per-class sample counts, indexed by class id.
    pub fn class_counts(&self) -> &[usize] {
        &self.class_counts
    }

    /// Sample indices grouped by class id, each group ascending.
    pub fn indices_by_class(&self) -> Vec<Vec<usize>> {
        let mut groups = vec![Vec::new(); self.num_classes()];
        for (i, &l) in self.labels.labels().iter().enumerate() {
            groups[l].push(i);
        }
        groups
    }

    /// Size-ranked class distribution; errors if any class is empty.
    pub fn distribution(&self) -> Result<ClassDistribution> {
        ClassDistribution::from_unsorted(&self.class_counts)
    }

    /// Copies the selected samples into a batch, in the given order.
    pub fn gather(&self, indices: &[usize]) -> Result<(Matrix, OneHotBatch)> {
        Ok((
            self.features.select_rows(indices)?,
            self.labels.select(indices)?,
        ))
    }

    /// New dataset holding only the selected samples, metadata retained.
    pub fn subset(&self, indices: &[usize], name: impl Into<String>) -> Result<LabeledDataset> {
        let (features, labels) = self.gather(indices)?;
        LabeledDataset::with_names(
            name,
            features,
            labels,
            self.class_names.clone(),
            self.feature_names.clone(),
            self.label_name.clone(),
        )
    }
}

/// Deterministic Gaussian blob classes for desk-scale experiments.
///
/// Class means sit on a circle of radius `class_separation` in the
/// first two feature dimensions (remaining dimensions zero); samples
/// add isotropic Gaussian noise of the given standard deviation. The
/// result is class-balanced and fully reproducible from the seed.
pub fn generate_blobs(
    num_classes: usize,
    per_class: usize,
    dims: usize,
    class_separation: f64,
    noise_std: f64,
    seed: u64,
) -> Result<LabeledDataset> {
    if num_classes < 2 {
        return Err(Error::InvalidParameter(
            "blobs need at least 2 classes".to_string(),
        ));
    }
    if per_class < 1 {
        return Err(Error::InvalidParameter(
            "blobs need at least 1 sample per class".to_string(),
        ));
    }
    if dims < 2 {
        return Err(Error::InvalidParameter(
            "blobs need at least 2 dimensions".to_string(),
        ));
    }
    if !noise_std.is_finite() || noise_std < 0.0 {
        return Err(Error::InvalidParameter(format!(
            "noise_std must be finite and >= 0, got {noise_std}"
        )));
    }
    if !class_separation.is_finite() {
        return Err(Error::InvalidParameter(
            "class_separation must be finite".to_string(),
        ));
    }
    let n = num_classes * per_class;
    let mut data = Vec::with_capacity(n * dims);
    let mut labels = Vec::with_capacity(n);
    let mut rng = Xoshiro256pp::from_seed(seed);
    let mut spare = None;
    for class in 0..num_classes {
        let angle = 2.0 * std::f64::consts::PI * class as f64 / num_classes as f64;
        let mean = |d: usize| match d {
            0 => class_separation * angle.cos(),
            1 => class_separation * angle.sin(),
            _ => 0.0,
        };
        for _ in 0..per_class {
            for d in 0..dims {
                data.push(mean(d) + noise_std * rng.next_gaussian(&mut spare));
            }
            labels.push(class);
        }
    }
    LabeledDataset::new(
        "blobs",
        Matrix::new(n, dims, data)?,
        OneHotBatch::new(labels, num_classes)?,
    )
}

/// Per-feature mean and standard deviation of a training set.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureStats {
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
}

/// Population mean/std per feature column. Standard deviations below
/// `1e-8` (constant features) are replaced by 1.
pub fn feature_stats(train: &LabeledDataset) -> Result<FeatureStats> {
    let n = train.num_samples();
    if n == 0 {
        return Err(Error::EmptyBatch);
    }
    let d = train.num_features();
    let mut mean = vec![0.0; d];
    for i in 0..n {
        for (m, &v) in mean.iter_mut().zip(train.features().row(i)) {
            *m += v;
        }
    }
    for m in &mut mean {
        *m /= n as f64;
    }
    let mut var = vec![0.0; d];
    for i in 0..n {
        for ((s, &v), &m) in var.iter_mut().zip(train.features().row(i)).zip(&mean) {
            let dev = v - m;
            *s += dev * dev;
        }
    }
    let std = var
        .into_iter()
        .map(|s| {
            let sd = (s / n as f64).sqrt();
            if sd < 1e-8 {
                1.0
            } else {
                sd
            }
        })
        .collect();
    Ok(FeatureStats { mean, std })
}

/// Applies `(x - mean) / std` to every feature column.
pub fn apply_stats(ds: &LabeledDataset, stats: &FeatureStats) -> Result<LabeledDataset> {
    if stats.mean.len() != ds.num_features() {
        return Err(Error::InvalidShape(format!(
            "stats over {} features vs dataset with {}",
            stats.mean.len(),
            ds.num_features()
        )));
    }
    let d = ds.num_features();
    let mut data = Vec::with_capacity(ds.num_samples() * d);
    for i in 0..ds.num_samples() {
        for ((&v, &m), &s) in ds
            .features()
            .row(i)
            .iter()
            .zip(&stats.mean)
            .zip(&stats.std)
        {
            data.push((v - m) / s);
        }
    }
    LabeledDataset::with_names(
        ds.name().to_string(),
        Matrix::new(ds.num_samples(), d, data)?,
        ds.labels().clone(),
        ds.class_names().to_vec(),
        ds.feature_names().to_vec(),
        ds.label_name().to_string(),
    )
}

/// Normalizes every dataset with statistics computed on `train` only.
pub fn normalize(
    train: &LabeledDataset,
    others: &[&LabeledDataset],
) -> Result<(LabeledDataset, Vec<LabeledDataset>)> {
    let stats = feature_stats(train)?;
    let train_out = apply_stats(train, &stats)?;
    let mut rest = Vec::with_capacity(others.len());
    for ds in others {
        rest.push(apply_stats(ds, &stats)?);
    }
    Ok((train_out, rest))
}

/// Mini-batch schedule.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BatchPlan {
    pub batch_size: usize,
    pub shuffle_seed: u64,
    pub drop_last: bool,
}

impl Default for BatchPlan {
    fn default() -> Self {
        BatchPlan {
            batch_size: 128,
            shuffle_seed: 0,
            drop_last: false,
        }
    }
}

/// Epoch-seeded shuffled batch index sets: the sample indices are
/// shuffled with seed `shuffle_seed XOR epoch`, then cut into
/// contiguous `batch_size` slices. The last partial batch is kept
/// unless `drop_last` is set.
pub fn batch_indices(num_samples: usize, plan: &BatchPlan, epoch: u64) -> Result<Vec<Vec<usize>>> {
    if plan.batch_size == 0 {
        return Err(Error::InvalidParameter("batch_size must be >= 1".to_string()));
    }
    let mut order: Vec<usize> = (0..num_samples).collect();
    let mut rng = Xoshiro256pp::from_seed(plan.shuffle_seed ^ epoch);
    rng.shuffle(&mut order);
    let mut out = Vec::new();
    for chunk in order.chunks(plan.batch_size) {
        if chunk.len() < plan.batch_size && plan.drop_last {
            break;
        }
        out.push(chunk.to_vec());
    }
    Ok(out)
}

/// Gathered mini-batches for one epoch, in schedule order.
pub fn batches<'a>(
    ds: &'a LabeledDataset,
    plan: &BatchPlan,
    epoch: u64,
) -> Result<impl Iterator<Item = (Matrix, OneHotBatch)> + 'a> {
    if ds.num_samples() == 0 {
        return Err(Error::EmptyBatch);
    }
    let index_sets = batch_indices(ds.num_samples(), plan, epoch)?;
    Ok(index_sets.into_iter().map(move |idx| {
        ds.gather(&idx)
            .expect("batch indices are in range by construction")
    }))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn blobs_are_balanced_and_shaped() {
        let ds = generate_blobs(10, 500, 2, 3.0, 1.0, 7).unwrap();
        assert_eq!(ds.num_samples(), 5000);
        assert_eq!(ds.num_features(), 2);
        assert!(ds.class_counts().iter().all(|&c| c == 500));
        assert_eq!(crate::imbalance::measure_ratio(&ds).unwrap(), 1.0);
    }

    #[test]
    fn blobs_zero_noise_hits_means_exactly() {
        let ds = generate_blobs(4, 3, 5, 2.0, 0.0, 11).unwrap();
        for (i, &label) in ds.labels().labels().iter().enumerate() {
            let angle = 2.0 * std::f64::consts::PI * label as f64 / 4.0;
            let row = ds.features().row(i);
            assert_eq!(row[0], 2.0 * angle.cos());
            assert_eq!(row[1], 2.0 * angle.sin());
            assert!(row[2..].iter().all(|&v| v == 0.0));
        }
    }

    #[test]
    fn blobs_are_bit_deterministic() {
        let a = generate_blobs(5, 20, 3, 4.0, 0.5, 99).unwrap();
        let b = generate_blobs(5, 20, 3, 4.0, 0.5, 99).unwrap();
        assert_eq!(a.features(), b.features());
        assert_eq!(a.labels(), b.labels());
        let c = generate_blobs(5, 20, 3, 4.0, 0.5, 100).unwrap();
        assert_ne!(a.features(), c.features());
    }

    #[test]
    fn blobs_reject_negative_noise() {
        assert!(matches!(
            generate_blobs(3, 5, 2, 1.0, -0.1, 0),
            Err(Error::InvalidParameter(_))
        ));
    }

    #[test]
    fn normalize_hand_example() {
        let features = Matrix::from_rows(&[vec![1.0, 5.0], vec![3.0, 5.0]]).unwrap();
        let labels = OneHotBatch::new(vec![0, 1], 2).unwrap();
        let ds = LabeledDataset::new("t", features, labels).unwrap();
        let (out, _) = normalize(&ds, &[]).unwrap();
        // column (1, 3): mean 2, population std 1 -> (-1, 1)
        assert_eq!(out.features().get(0, 0), -1.0);
        assert_eq!(out.features().get(1, 0), 1.0);
        // constant column maps to zeros under the std floor
        assert_eq!(out.features().get(0, 1), 0.0);
        assert_eq!(out.features().get(1, 1), 0.0);
    }

    #[test]
    fn normalize_uses_train_statistics_for_others() {
        let train = LabeledDataset::new(
            "train",
            Matrix::from_rows(&[vec![0.0], vec![2.0]]).unwrap(),
            OneHotBatch::new(vec![0, 1], 2).unwrap(),
        )
        .unwrap();
        let test = LabeledDataset::new(
            "test",
            Matrix::from_rows(&[vec![4.0]]).unwrap(),
            OneHotBatch::new(vec![0], 2).unwrap(),
        )
        .unwrap();
        let (_, others) = normalize(&train, &[&test]).unwrap();
        // train mean 1, std 1 -> (4 - 1) / 1 = 3, not test's own stats
        assert_eq!(others[0].features().get(0, 0), 3.0);
    }

    #[test]
    fn normalize_leaves_train_standardized() {
        let ds = generate_blobs(3, 50, 4, 2.0, 1.3, 5).unwrap();
        let (out, _) = normalize(&ds, &[]).unwrap();
        let stats = feature_stats(&out).unwrap();
        for d in 0..4 {
            assert!(stats.mean[d].abs() < 1e-9, "mean {}", stats.mean[d]);
            assert!((stats.std[d] - 1.0).abs() < 1e-6, "std {}", stats.std[d]);
        }
    }

    #[test]
    fn normalize_rejects_empty_train() {
        let empty = LabeledDataset::new(
            "e",
            Matrix::zeros(0, 2),
            OneHotBatch::new(vec![], 2).unwrap(),
        )
        .unwrap();
        assert!(matches!(normalize(&empty, &[]), Err(Error::EmptyBatch)));
    }

    #[test]
    fn batch_sizes_follow_plan() {
        let plan = BatchPlan {
            batch_size: 128,
            shuffle_seed: 3,
            drop_last: false,
        };
        let sizes: Vec<usize> = batch_indices(300, &plan, 0)
            .unwrap()
            .iter()
            .map(|b| b.len())
            .collect();
        assert_eq!(sizes, vec![128, 128, 44]);
        let dropped = BatchPlan {
            drop_last: true,
            ..plan
        };
        let sizes: Vec<usize> = batch_indices(300, &dropped, 0)
            .unwrap()
            .iter()
            .map(|b| b.len())
            .collect();
        assert_eq!(sizes, vec![128, 128]);
    }

    #[test]
    fn batches_partition_the_index_set() {
        let plan = BatchPlan {
            batch_size: 7,
            shuffle_seed: 17,
            drop_last: false,
        };
        let mut seen: Vec<usize> = batch_indices(50, &plan, 3)
            .unwrap()
            .into_iter()
            .flatten()
            .collect();
        seen.sort_unstable();
        assert_eq!(seen, (0..50).collect::<Vec<_>>());
    }

    #[test]
    fn batch_order_is_epoch_seeded_and_deterministic() {
        let plan = BatchPlan {
            batch_size: 16,
            shuffle_seed: 1234,
            drop_last: false,
        };
        assert_eq!(
            batch_indices(100, &plan, 5).unwrap(),
            batch_indices(100, &plan, 5).unwrap()
        );
        assert_ne!(
            batch_indices(100, &plan, 5).unwrap(),
            batch_indices(100, &plan, 6).unwrap()
        );
    }

    #[test]
    fn gathered_batches_match_indices() {
        let ds = generate_blobs(3, 10, 2, 2.0, 0.1, 8).unwrap();
        let plan = BatchPlan {
            batch_size: 8,
            shuffle_seed: 2,
            drop_last: false,
        };
        let idx = batch_indices(30, &plan, 0).unwrap();
        let got: Vec<(Matrix, OneHotBatch)> = batches(&ds, &plan, 0).unwrap().collect();
        assert_eq!(got.len(), idx.len());
        for (b, ids) in got.iter().zip(&idx) {
            assert_eq!(b.0.rows(), ids.len());
            for (r, &i) in ids.iter().enumerate() {
                assert_eq!(b.0.row(r), ds.features().row(i));
                assert_eq!(b.1.labels()[r], ds.labels().labels()[i]);
            }
        }
    }
}
