//! Minimal dense numeric kernel: row-major matrices, numerically stable
//! softmax / log-softmax, one-hot encoding, and the handful of linear
//! algebra operations the losses and the perceptron need.
//!
//! Layout is sample-per-row throughout: a batch of `N` samples over `K`
//! classes is an `N x K` matrix. There is no broadcasting beyond
//! row-wise operations.

#[doc(hidden)]
pub mod kernels;

use crate::error::{Error, Result};
use kernels::run_rows;
use serde::{Deserialize, Serialize};

/// Dense row-major `f64` matrix.
///
/// Construction validates that the data is finite; the exported
/// operations preserve finiteness for finite inputs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::InvalidShape(format!(
                "data length {} != {rows} x {cols}",
                data.len()
            )));
        }
        if !data.iter().all(|v| v.is_finite()) {
            return Err(Error::InvalidInput(
                "matrix entries must be finite".to_string(),
            ));
        }
        Ok(Matrix { rows, cols, data })
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Matrix {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    /// Builds a matrix from equally long rows. Test and loader convenience.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let r = rows.len();
        let c = rows.first().map_or(0, |row| row.len());
        if rows.iter().any(|row| row.len() != c) {
            return Err(Error::InvalidShape("ragged rows".to_string()));
        }
        let mut data = Vec::with_capacity(r * c);
        for row in rows {
            data.extend_from_slice(row);
        }
        Matrix::new(r, c, data)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.data[r * self.cols + c]
    }

    pub fn row(&self, r: usize) -> &[f64] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub(crate) fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn all_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    fn check_same_shape(&self, other: &Matrix, op: &str) -> Result<()> {
        if self.rows != other.rows || self.cols != other.cols {
            return Err(Error::InvalidShape(format!(
                "{op}: {}x{} vs {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        Ok(())
    }

    /// `self (N x K) * rhs (K x M) -> N x M`.
    pub fn matmul(&self, rhs: &Matrix) -> Result<Matrix> {
        if self.cols != rhs.rows {
            return Err(Error::InvalidShape(format!(
                "matmul: {}x{} * {}x{}",
                self.rows, self.cols, rhs.rows, rhs.cols
            )));
        }
        let (k, m) = (self.cols, rhs.cols);
        let mut out = Matrix::zeros(self.rows, m);
        run_rows(&mut out.data, m, k.saturating_mul(m), |i, orow| {
            let arow = &self.data[i * k..(i + 1) * k];
            for (kk, &aik) in arow.iter().enumerate() {
                let brow = &rhs.data[kk * m..(kk + 1) * m];
                for (o, &b) in orow.iter_mut().zip(brow) {
                    *o += aik * b;
                }
            }
        });
        Ok(out)
    }

    /// `transpose(self) (P x N) * rhs (N x M) -> P x M` without
    /// materializing the transpose. Backprop's weight-gradient shape.
    pub fn t_matmul(&self, rhs: &Matrix) -> Result<Matrix> {
        if self.rows != rhs.rows {
            return Err(Error::InvalidShape(format!(
                "t_matmul: {}x{} vs {}x{}",
                self.rows, self.cols, rhs.rows, rhs.cols
            )));
        }
        let (n, p, m) = (self.rows, self.cols, rhs.cols);
        let mut out = Matrix::zeros(p, m);
        run_rows(&mut out.data, m, n.saturating_mul(m), |pi, orow| {
            for ni in 0..n {
                let a = self.data[ni * p + pi];
                let brow = &rhs.data[ni * m..(ni + 1) * m];
                for (o, &b) in orow.iter_mut().zip(brow) {
                    *o += a * b;
                }
            }
        });
        Ok(out)
    }

    /// `self (N x K) * transpose(rhs) (K x M) -> N x M`.
    pub fn matmul_t(&self, rhs: &Matrix) -> Result<Matrix> {
        if self.cols != rhs.cols {
            return Err(Error::InvalidShape(format!(
                "matmul_t: {}x{} vs {}x{}",
                self.rows, self.cols, rhs.rows, rhs.cols
            )));
        }
        let (k, m) = (self.cols, rhs.rows);
        let mut out = Matrix::zeros(self.rows, m);
        run_rows(&mut out.data, m, k.saturating_mul(m), |i, orow| {
            let arow = &self.data[i * k..(i + 1) * k];
            for (j, o) in orow.iter_mut().enumerate() {
                let brow = &rhs.data[j * k..(j + 1) * k];
                let mut acc = 0.0;
                for (&a, &b) in arow.iter().zip(brow) {
                    acc += a * b;
                }
                *o = acc;
            }
        });
        Ok(out)
    }

    /// Adds `bias` to every row in place.
    pub fn add_row_bias(&mut self, bias: &[f64]) -> Result<()> {
        if bias.len() != self.cols {
            return Err(Error::InvalidShape(format!(
                "bias length {} != cols {}",
                bias.len(),
                self.cols
            )));
        }
        let cols = self.cols;
        run_rows(&mut self.data, cols, 1, |_, row| {
            for (v, &b) in row.iter_mut().zip(bias) {
                *v += b;
            }
        });
        Ok(())
    }

    /// Elementwise `max(0, x)`.
    pub fn relu(&self) -> Matrix {
        let mut out = self.clone();
        let cols = out.cols;
        run_rows(&mut out.data, cols, 1, |_, row| {
            for v in row.iter_mut() {
                if *v < 0.0 {
                    *v = 0.0;
                }
            }
        });
        out
    }

    /// Zeroes entries of `self` wherever `gate <= 0`; the backward mask
    /// of [`Matrix::relu`] evaluated at the forward activations.
    pub fn relu_backward_mask(&self, gate: &Matrix) -> Result<Matrix> {
        self.check_same_shape(gate, "relu_backward_mask")?;
        let mut out = self.clone();
        let cols = out.cols;
        run_rows(&mut out.data, cols, 1, |i, row| {
            let grow = gate.row(i);
            for (v, &g) in row.iter_mut().zip(grow) {
                if g <= 0.0 {
                    *v = 0.0;
                }
            }
        });
        Ok(out)
    }

    pub fn add(&self, other: &Matrix) -> Result<Matrix> {
        self.check_same_shape(other, "add")?;
        let mut out = self.clone();
        for (v, &o) in out.data.iter_mut().zip(&other.data) {
            *v += o;
        }
        Ok(out)
    }

    pub fn scale_in_place(&mut self, factor: f64) {
        for v in &mut self.data {
            *v *= factor;
        }
    }

    pub fn scaled(&self, factor: f64) -> Matrix {
        let mut out = self.clone();
        out.scale_in_place(factor);
        out
    }

    /// Column sums, accumulated in row order.
    pub fn column_sums(&self) -> Vec<f64> {
        let mut sums = vec![0.0; self.cols];
        for r in 0..self.rows {
            for (s, &v) in sums.iter_mut().zip(self.row(r)) {
                *s += v;
            }
        }
        sums
    }

    /// Copies the selected rows into a new matrix, in the given order.
    pub fn select_rows(&self, indices: &[usize]) -> Result<Matrix> {
        let mut data = Vec::with_capacity(indices.len() * self.cols);
        for &i in indices {
            if i >= self.rows {
                return Err(Error::InvalidIndex(format!(
                    "row {i} out of range for {} rows",
                    self.rows
                )));
            }
            data.extend_from_slice(self.row(i));
        }
        Ok(Matrix {
            rows: indices.len(),
            cols: self.cols,
            data,
        })
    }
}

/// Integer class labels for a batch, validated against the class count.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct OneHotBatch {
    labels: Vec<usize>,
    num_classes: usize,
}

impl OneHotBatch {
    pub fn new(labels: Vec<usize>, num_classes: usize) -> Result<Self> {
        if num_classes == 0 {
            return Err(Error::InvalidShape("num_classes must be >= 1".to_string()));
        }
        if let Some(&bad) = labels.iter().find(|&&l| l >= num_classes) {
            return Err(Error::InvalidLabel(format!(
                "label {bad} >= num_classes {num_classes}"
            )));
        }
        Ok(OneHotBatch {
            labels,
            num_classes,
        })
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn num_classes(&self) -> usize {
        self.num_classes
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn select(&self, indices: &[usize]) -> Result<OneHotBatch> {
        let mut labels = Vec::with_capacity(indices.len());
        for &i in indices {
            let l = *self.labels.get(i).ok_or_else(|| {
                Error::InvalidIndex(format!("sample {i} out of range for {}", self.labels.len()))
            })?;
            labels.push(l);
        }
        Ok(OneHotBatch {
            labels,
            num_classes: self.num_classes,
        })
    }
}

/// Dense one-hot expansion: row `i` holds 1 at column `labels[i]`.
pub fn one_hot(labels: &OneHotBatch) -> Matrix {
    let (n, k) = (labels.len(), labels.num_classes());
    let mut out = Matrix::zeros(n, k);
    for (i, &g) in labels.labels().iter().enumerate() {
        out.data[i * k + g] = 1.0;
    }
    out
}

/// Softmax outputs paired with the logits they came from.
///
/// Keeping the logits alongside lets downstream losses evaluate
/// log-probabilities through log-softmax instead of `ln` of a clamped
/// probability.
#[derive(Debug, Clone, PartialEq)]
pub struct ProbBatch {
    probs: Matrix,
    logits: Matrix,
}

impl ProbBatch {
    pub fn probs(&self) -> &Matrix {
        &self.probs
    }

    pub fn logits(&self) -> &Matrix {
        &self.logits
    }

    pub fn num_samples(&self) -> usize {
        self.probs.rows()
    }

    pub fn num_classes(&self) -> usize {
        self.probs.cols()
    }

    /// Builds a batch directly from probabilities, recovering logits as
    /// `ln p` (clamped away from zero). Rows must lie on the simplex.
    pub fn from_probs(probs: Matrix) -> Result<Self> {
        if probs.cols() < 2 {
            return Err(Error::InvalidShape(
                "probability batch needs >= 2 classes".to_string(),
            ));
        }
        for r in 0..probs.rows() {
            let row = probs.row(r);
            if row.iter().any(|&p| !(0.0..=1.0 + 1e-9).contains(&p)) {
                return Err(Error::InvalidInput(format!(
                    "row {r} has entries outside [0, 1]"
                )));
            }
            let sum: f64 = row.iter().sum();
            if (sum - 1.0).abs() > 1e-6 {
                return Err(Error::InvalidInput(format!(
                    "row {r} sums to {sum}, not 1"
                )));
            }
        }
        let mut logits = probs.clone();
        for v in &mut logits.data {
            *v = v.max(1e-300).ln();
        }
        Ok(ProbBatch { probs, logits })
    }
}

fn check_logits(logits: &Matrix) -> Result<()> {
    if logits.cols() < 2 {
        return Err(Error::InvalidShape(format!(
            "softmax needs >= 2 classes, got {}",
            logits.cols()
        )));
    }
    if !logits.all_finite() {
        return Err(Error::InvalidInput("non-finite logits".to_string()));
    }
    Ok(())
}

/// Row-wise softmax, stabilized by subtracting each row's maximum before
/// exponentiation.
pub fn softmax(logits: &Matrix) -> Result<ProbBatch> {
    check_logits(logits)?;
    let cols = logits.cols();
    let mut probs = Matrix::zeros(logits.rows(), cols);
    run_rows(&mut probs.data, cols, 4 * cols, |i, prow| {
        let lrow = logits.row(i);
        let max = lrow.iter().fold(f64::NEG_INFINITY, |a, &b| a.max(b));
        let mut sum = 0.0;
        for (p, &l) in prow.iter_mut().zip(lrow) {
            let e = (l - max).exp();
            *p = e;
            sum += e;
        }
        let inv = 1.0 / sum;
        for p in prow.iter_mut() {
            *p *= inv;
        }
    });
    Ok(ProbBatch {
        probs,
        logits: logits.clone(),
    })
}

/// Row-wise log-softmax: `x_j - logsumexp(x)`, stabilized the same way.
pub fn log_softmax(logits: &Matrix) -> Result<Matrix> {
    check_logits(logits)?;
    let cols = logits.cols();
    let mut out = Matrix::zeros(logits.rows(), cols);
    run_rows(&mut out.data, cols, 4 * cols, |i, orow| {
        let lrow = logits.row(i);
        let max = lrow.iter().fold(f64::NEG_INFINITY, |a, &b| a.max(b));
        let mut sum = 0.0;
        for &l in lrow {
            sum += (l - max).exp();
        }
        let lse = max + sum.ln();
        for (o, &l) in orow.iter_mut().zip(lrow) {
            *o = l - lse;
        }
    });
    Ok(out)
}

/// Index of the row maximum, lowest index winning ties.
pub fn argmax_row(row: &[f64]) -> usize {
    let mut best = 0;
    for (j, &v) in row.iter().enumerate().skip(1) {
        if v > row[best] {
            best = j;
        }
    }
    best
}
