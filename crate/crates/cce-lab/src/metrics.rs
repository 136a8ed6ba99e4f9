//! Confusion-matrix accumulation and balanced accuracy.
//!
//! Balanced accuracy is the mean per-class recall, so a classifier that
//! collapses onto the majority class scores poorly even when plain
//! accuracy would look healthy. Plain top-1 accuracy is kept alongside
//! for reference.

use crate::error::{Error, Result};
use crate::tensor::{argmax_row, OneHotBatch, ProbBatch};
use serde::{Deserialize, Serialize};
use std::io::Write;

/// `K x K` count matrix; rows index the actual class, columns the
/// predicted class.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    num_classes: usize,
    counts: Vec<u64>,
}

impl ConfusionMatrix {
    pub fn new(num_classes: usize) -> Self {
        ConfusionMatrix {
            num_classes,
            counts: vec![0; num_classes * num_classes],
        }
    }

    pub fn num_classes(&self) -> usize {
        self.num_classes
    }

    pub fn count(&self, actual: usize, predicted: usize) -> u64 {
        self.counts[actual * self.num_classes + predicted]
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    /// Builds a matrix from explicit rows. Test and report convenience.
    pub fn from_rows(rows: &[Vec<u64>]) -> Result<Self> {
        let k = rows.len();
        if rows.iter().any(|r| r.len() != k) {
            return Err(Error::InvalidShape(
                "confusion matrix must be square".to_string(),
            ));
        }
        let mut counts = Vec::with_capacity(k * k);
        for row in rows {
            counts.extend_from_slice(row);
        }
        Ok(ConfusionMatrix {
            num_classes: k,
            counts,
        })
    }

    /// Tallies one batch of predictions: for each sample,
    /// `counts[actual][argmax(probs row)] += 1`, ties broken toward the
    /// lowest class index.
    pub fn accumulate(&mut self, probs: &ProbBatch, labels: &OneHotBatch) -> Result<()> {
        if probs.num_classes() != self.num_classes
            || labels.num_classes() != self.num_classes
            || probs.num_samples() != labels.len()
        {
            return Err(Error::InvalidShape(format!(
                "confusion {k}x{k} vs probs {n}x{pk} vs {l} labels over {lk}",
                k = self.num_classes,
                n = probs.num_samples(),
                pk = probs.num_classes(),
                l = labels.len(),
                lk = labels.num_classes()
            )));
        }
        for (i, &actual) in labels.labels().iter().enumerate() {
            let predicted = argmax_row(probs.probs().row(i));
            self.counts[actual * self.num_classes + predicted] += 1;
        }
        Ok(())
    }

    /// Elementwise addition, for merging evaluation shards.
    pub fn merge(&mut self, other: &ConfusionMatrix) -> Result<()> {
        if other.num_classes != self.num_classes {
            return Err(Error::InvalidShape(format!(
                "merge: {} vs {} classes",
                self.num_classes, other.num_classes
            )));
        }
        for (a, &b) in self.counts.iter_mut().zip(&other.counts) {
            *a += b;
        }
        Ok(())
    }

    /// Per-class recall `N[i][i] / Σ_j N[i][j]`; `None` when the class
    /// has no samples (0/0 is undefined, not zero).
    pub fn recall(&self, class: usize) -> Result<Option<f64>> {
        if class >= self.num_classes {
            return Err(Error::InvalidIndex(format!(
                "class {class} out of range for {} classes",
                self.num_classes
            )));
        }
        let row = &self.counts[class * self.num_classes..(class + 1) * self.num_classes];
        let total: u64 = row.iter().sum();
        if total == 0 {
            return Ok(None);
        }
        Ok(Some(row[class] as f64 / total as f64))
    }

    /// Mean recall over classes that have samples. Classes with empty
    /// rows are excluded from the mean; their indices are reported via
    /// [`ConfusionMatrix::empty_classes`] for run logs.
    pub fn balanced_accuracy(&self) -> Result<f64> {
        let mut sum = 0.0;
        let mut defined = 0usize;
        for class in 0..self.num_classes {
            if let Some(r) = self.recall(class)? {
                sum += r;
                defined += 1;
            }
        }
        if defined == 0 {
            return Err(Error::EmptyEvaluation);
        }
        Ok(sum / defined as f64)
    }

    /// Classes whose rows hold no samples (excluded from balanced
    /// accuracy).
    pub fn empty_classes(&self) -> Vec<usize> {
        (0..self.num_classes)
            .filter(|&c| {
                self.counts[c * self.num_classes..(c + 1) * self.num_classes]
                    .iter()
                    .all(|&v| v == 0)
            })
            .collect()
    }

    /// Fraction of samples on the diagonal; plain top-1 accuracy.
    pub fn accuracy(&self) -> Result<f64> {
        let total = self.total();
        if total == 0 {
            return Err(Error::EmptyEvaluation);
        }
        let correct: u64 = (0..self.num_classes).map(|c| self.count(c, c)).sum();
        Ok(correct as f64 / total as f64)
    }

    /// CSV serialization: a header row of class names, then K rows of K
    /// comma-separated counts.
    pub fn write_csv<W: Write>(&self, mut out: W, class_names: &[String]) -> Result<()> {
        if class_names.len() != self.num_classes {
            return Err(Error::InvalidShape(format!(
                "{} class names for {} classes",
                class_names.len(),
                self.num_classes
            )));
        }
        writeln!(out, "{}", class_names.join(","))?;
        for c in 0..self.num_classes {
            let row: Vec<String> = (0..self.num_classes)
                .map(|p| self.count(c, p).to_string())
                .collect();
            writeln!(out, "{}", row.join(","))?;
        }
        Ok(())
    }
}
