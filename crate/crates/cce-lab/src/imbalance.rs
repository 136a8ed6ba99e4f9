//! Long-tailed and step imbalance construction.
//!
//! Starting from a (usually balanced) training set, these builders plan
//! per-class retention counts and randomly remove samples per class to
//! realize them. Test sets are never touched. Two plan shapes:
//!
//! - long-tailed: counts follow geometric decay
//!   `n_i = base * ratio^(-(i-1)/(K-1))`, hitting `base` for the largest
//!   class and `base/ratio` for the smallest;
//! - step: the larger-half classes keep `base`, the rest get
//!   `base/ratio`.
//!
//! The imbalance ratio of a dataset is its largest class count divided
//! by its smallest.

use crate::data::LabeledDataset;
use crate::error::{Error, Result};
use crate::rng::{derive_seed, Xoshiro256pp};
use serde::{Deserialize, Serialize};
use std::io::Write;

/// Per-class sample counts indexed by size rank (largest first).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClassDistribution {
    counts: Vec<usize>,
}

impl ClassDistribution {
    /// Counts must be non-increasing and at least 1 each.
    pub fn new(counts: Vec<usize>) -> Result<Self> {
        if counts.is_empty() {
            return Err(Error::InvalidDistribution("no classes".to_string()));
        }
        if counts.iter().any(|&c| c == 0) {
            return Err(Error::InvalidDistribution(
                "every class needs at least one sample".to_string(),
            ));
        }
        if counts.windows(2).any(|w| w[0] < w[1]) {
            return Err(Error::InvalidDistribution(
                "counts must be non-increasing by rank".to_string(),
            ));
        }
        Ok(ClassDistribution { counts })
    }

    /// Ranks arbitrary per-class counts into a distribution.
    pub fn from_unsorted(counts: &[usize]) -> Result<Self> {
        let mut sorted = counts.to_vec();
        sorted.sort_unstable_by(|a, b| b.cmp(a));
        ClassDistribution::new(sorted)
    }

    pub fn counts(&self) -> &[usize] {
        &self.counts
    }

    pub fn num_classes(&self) -> usize {
        self.counts.len()
    }

    pub fn total(&self) -> usize {
        self.counts.iter().sum()
    }

    /// Largest over smallest class count.
    pub fn imbalance_ratio(&self) -> f64 {
        self.counts[0] as f64 / *self.counts.last().unwrap() as f64
    }

    /// CSV serialization for class-distribution plots:
    /// `class_index,count` with classes in rank order.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "class_index,count")?;
        for (i, c) in self.counts.iter().enumerate() {
            writeln!(out, "{i},{c}")?;
        }
        Ok(())
    }
}

/// Imbalance shape selector.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ImbalanceKind {
    LongTailed,
    Step,
}

impl ImbalanceKind {
    pub fn short_name(self) -> &'static str {
        match self {
            ImbalanceKind::LongTailed => "lt",
            ImbalanceKind::Step => "step",
        }
    }
}

/// Full imbalance request: shape, target ratio, subsample seed.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ImbalanceSpec {
    pub kind: ImbalanceKind,
    pub ratio: f64,
    pub seed: u64,
}

fn check_plan_inputs(base_count: usize, num_classes: usize, ratio: f64) -> Result<()> {
    if num_classes < 2 {
        return Err(Error::InvalidParameter(
            "imbalance plans need at least 2 classes".to_string(),
        ));
    }
    if !ratio.is_finite() || ratio < 1.0 {
        return Err(Error::InvalidParameter(format!(
            "imbalance ratio must be >= 1, got {ratio}"
        )));
    }
    if (base_count as f64) < ratio {
        return Err(Error::InfeasibleRatio(format!(
            "base count {base_count} < ratio {ratio}: the smallest class would be empty"
        )));
    }
    Ok(())
}

fn rounded_count(x: f64) -> usize {
    (x.round() as usize).max(1)
}

/// Geometric-decay retention plan:
/// `n_i = round(base * ratio^(-(i-1)/(K-1)))`, clamped to at least 1.
pub fn plan_long_tailed(
    base_count: usize,
    num_classes: usize,
    ratio: f64,
) -> Result<ClassDistribution> {
    check_plan_inputs(base_count, num_classes, ratio)?;
    let k = num_classes as f64;
    let counts = (0..num_classes)
        .map(|i| rounded_count(base_count as f64 * ratio.powf(-(i as f64) / (k - 1.0))))
        .collect();
    ClassDistribution::new(counts)
}

/// Step retention plan: the first `ceil(K/2)` ranked classes keep
/// `base_count`, the rest get `round(base_count / ratio)`.
pub fn plan_step(base_count: usize, num_classes: usize, ratio: f64) -> Result<ClassDistribution> {
    check_plan_inputs(base_count, num_classes, ratio)?;
    let majority = num_classes.div_ceil(2);
    let minority_count = rounded_count(base_count as f64 / ratio);
    let counts = (0..num_classes)
        .map(|i| if i < majority { base_count } else { minority_count })
        .collect();
    ClassDistribution::new(counts)
}

/// Randomly removes samples per class to realize the planned
/// distribution. Plan ranks are assigned to classes in descending
/// original size, ties broken by class index; the plan's base count is
/// the largest original class size. Retained samples keep their
/// original relative order, and the result is deterministic for a
/// fixed seed (one derived stream per class).
pub fn subsample(dataset: &LabeledDataset, spec: &ImbalanceSpec) -> Result<LabeledDataset> {
    let by_class = dataset.indices_by_class();
    let k = by_class.len();
    if let Some(empty) = by_class.iter().position(|g| g.is_empty()) {
        return Err(Error::InvalidDistribution(format!(
            "class {empty} has no samples"
        )));
    }
    let base_count = by_class.iter().map(|g| g.len()).max().unwrap_or(0);
    let plan = match spec.kind {
        ImbalanceKind::LongTailed => plan_long_tailed(base_count, k, spec.ratio)?,
        ImbalanceKind::Step => plan_step(base_count, k, spec.ratio)?,
    };

    // rank classes by descending size, ties by class index
    let mut order: Vec<usize> = (0..k).collect();
    order.sort_by_key(|&c| (std::cmp::Reverse(by_class[c].len()), c));

    let mut retained = Vec::new();
    for (rank, &class) in order.iter().enumerate() {
        let want = plan.counts()[rank];
        let have = by_class[class].len();
        if have < want {
            return Err(Error::InsufficientSamples(format!(
                "class {class} holds {have} samples, plan needs {want}"
            )));
        }
        let mut rng = Xoshiro256pp::from_seed(derive_seed(spec.seed, class as u64));
        for local in rng.sample_indices(have, want) {
            retained.push(by_class[class][local]);
        }
    }
    retained.sort_unstable();
    dataset.subset(&retained, dataset.name().to_string())
}

/// Largest class count over smallest; every class must be populated.
pub fn measure_ratio(dataset: &LabeledDataset) -> Result<f64> {
    let counts = dataset.class_counts();
    let min = *counts
        .iter()
        .min()
        .ok_or_else(|| Error::InvalidDistribution("dataset has no classes".to_string()))?;
    if min == 0 {
        return Err(Error::InvalidDistribution(
            "a class has no samples".to_string(),
        ));
    }
    let max = *counts.iter().max().unwrap();
    Ok(max as f64 / min as f64)
}
