//! Training objectives with analytic gradients.
//!
//! All losses are per-batch means and return both the scalar value and
//! the gradient with respect to the *logits* — the quantity the
//! optimizer consumes. Probabilities are never differentiated directly;
//! every gradient is taken through the softmax.
//!
//! Notation, per sample: `z` logits, `p = softmax(z)`, `g` the ground
//! truth index, `s = 1 - p[g]` the total incorrect-class mass, and
//! `q[j] = p[j] / s` the renormalized incorrect-class distribution.
//!
//! # Gradient derivations
//!
//! The softmax Jacobian is `dp[j]/dz[k] = p[j] (δ[jk] - p[k])`, so for
//! any scalar `E(p)` with `u[j] = dE/dp[j]`:
//!
//! ```text
//! dE/dz[k] = p[k] * u[k] - p[k] * Σ_j p[j] u[j]          (*)
//! ```
//!
//! **Cross entropy.** `H = -ln p[g]` per sample. Applying (*) gives the
//! familiar `dH/dz[k] = p[k] - δ[gk]`; batch gradient `(p - y)/N`.
//!
//! **Complement entropy.** Per sample, the Shannon entropy of `q` over
//! the incorrect classes:
//!
//! ```text
//! E = -Σ_{j≠g} q[j] ln q[j] = -A/s + ln s,   A = Σ_{j≠g} p[j] ln p[j]
//! ```
//!
//! Partial derivatives with respect to `p`:
//!
//! ```text
//! dE/dp[k] = -(ln p[k] + 1)/s                      (k ≠ g)
//! dE/dp[g] = -A/s² - 1/s = (E - ln s - 1)/s
//! ```
//!
//! Writing `v[k] = p[k] * dE/dp[k]`, (*) becomes
//! `dE/dz[k] = v[k] - p[k] Σ_j v[j]`, where
//!
//! ```text
//! v[k] = -q[k] (ln p[k] + 1)        (k ≠ g, v[k] = 0 when p[k] = 0)
//! v[g] = p[g] (E - ln s - 1) / s
//! ```
//!
//! When `s ≤ ε` the prediction has collapsed onto the true class; the
//! limit of every `q ln q` term is 0 and the zero gradient is the
//! unique continuous extension, so the sample contributes nothing.
//!
//! **Balanced / modulated variants.** Scaling a loss by a constant `c`
//! scales value and gradient by `c`: `1/(K-1)` for the balanced form,
//! `γ/(K-1)` for the modulated form.
//!
//! **Complement cross entropy.** The sum of cross entropy and the
//! modulated complement term, sharing one softmax evaluation; value and
//! gradient add.
//!
//! **Focal loss.** Per sample `L = -(1-p[g])^λ ln p[g]` depends on `p`
//! only through `p[g]`, so with `a = 1 - p[g]`, `t = ln p[g]`:
//!
//! ```text
//! dL/dp[g] = λ a^(λ-1) t - a^λ / p[g]
//! dL/dz[k] = c (δ[gk] - p[k]),   c = p[g] dL/dp[g] = λ a^(λ-1) t p[g] - a^λ
//! ```
//!
//! `λ = 0` reduces `c` to `-1`, recovering cross entropy exactly; as
//! `a → 0` (perfect prediction) `c → 0` for `λ > 0`.
//!
//! All of the above are validated against central finite differences in
//! the test suite; see `gradcheck`.

use crate::error::{Error, Result};
use crate::tensor::kernels::run_rows_scalar;
use crate::tensor::{log_softmax, softmax, Matrix, OneHotBatch, ProbBatch};
use serde::{Deserialize, Serialize};

/// Shared loss hyperparameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LossConfig {
    /// Modulating factor for the complement term; negative so that
    /// minimizing the combined objective flattens incorrect-class
    /// probabilities.
    pub gamma: f64,
    /// Focal loss focusing exponent.
    pub focal_focus: f64,
    /// Degenerate-sample floor: a sample whose incorrect-class mass
    /// `1 - p[g]` is at or below this contributes zero complement value
    /// and gradient.
    pub epsilon: f64,
}

impl Default for LossConfig {
    fn default() -> Self {
        LossConfig {
            gamma: -1.0,
            focal_focus: 2.0,
            epsilon: 1e-12,
        }
    }
}

impl LossConfig {
    pub fn with_gamma(gamma: f64) -> Self {
        LossConfig {
            gamma,
            ..LossConfig::default()
        }
    }
}

/// Scalar objective value plus its gradient with respect to logits.
#[derive(Debug, Clone, PartialEq)]
pub struct LossReport {
    pub value: f64,
    pub grad_logits: Matrix,
}

fn check_pair(probs: &ProbBatch, labels: &OneHotBatch) -> Result<()> {
    if labels.is_empty() {
        return Err(Error::EmptyBatch);
    }
    if probs.num_samples() != labels.len() || probs.num_classes() != labels.num_classes() {
        return Err(Error::InvalidShape(format!(
            "probs {}x{} vs {} labels over {} classes",
            probs.num_samples(),
            probs.num_classes(),
            labels.len(),
            labels.num_classes()
        )));
    }
    Ok(())
}

fn check_epsilon(epsilon: f64) -> Result<()> {
    if !(epsilon > 0.0 && epsilon <= 1e-6) {
        return Err(Error::InvalidParameter(format!(
            "epsilon {epsilon} outside (0, 1e-6]"
        )));
    }
    Ok(())
}

/// Mean negative log-probability of the true class, with gradient
/// `(p - y)/N`. The value goes through log-softmax of the retained
/// logits, never through `ln` of a clamped probability.
pub fn cross_entropy(probs: &ProbBatch, labels: &OneHotBatch) -> Result<LossReport> {
    check_pair(probs, labels)?;
    let (n, k) = (probs.num_samples(), probs.num_classes());
    let ls = log_softmax(probs.logits())?;
    let p = probs.probs();
    let inv_n = 1.0 / n as f64;
    let mut grad = Matrix::zeros(n, k);
    let mut per_sample = vec![0.0; n];
    let label_slice = labels.labels();
    run_rows_scalar(grad.data_mut(), k, &mut per_sample, 2 * k, |i, grow, val| {
        let g = label_slice[i];
        let prow = p.row(i);
        for (j, out) in grow.iter_mut().enumerate() {
            let indicator = if j == g { 1.0 } else { 0.0 };
            *out = (prow[j] - indicator) * inv_n;
        }
        *val = -ls.get(i, g);
    });
    let value = per_sample.iter().sum::<f64>() * inv_n;
    Ok(LossReport {
        value,
        grad_logits: grad,
    })
}

/// Mean Shannon entropy of the renormalized incorrect-class
/// distribution. Value lies in `[0, ln(K-1)]`; samples whose
/// incorrect-class mass is at or below `epsilon` contribute zero value
/// and gradient.
pub fn complement_entropy(
    probs: &ProbBatch,
    labels: &OneHotBatch,
    epsilon: f64,
) -> Result<LossReport> {
    check_pair(probs, labels)?;
    check_epsilon(epsilon)?;
    let (n, k) = (probs.num_samples(), probs.num_classes());
    if k < 2 {
        return Err(Error::InvalidShape(
            "complement entropy needs >= 2 classes".to_string(),
        ));
    }
    let ls = log_softmax(probs.logits())?;
    let p = probs.probs();
    let inv_n = 1.0 / n as f64;
    let mut grad = Matrix::zeros(n, k);
    let mut per_sample = vec![0.0; n];
    let label_slice = labels.labels();
    run_rows_scalar(grad.data_mut(), k, &mut per_sample, 6 * k, |i, grow, val| {
        let g = label_slice[i];
        let prow = p.row(i);
        let lsrow = ls.row(i);
        if 1.0 - prow[g] <= epsilon {
            // degenerate: mass concentrated on the true class
            for out in grow.iter_mut() {
                *out = 0.0;
            }
            *val = 0.0;
            return;
        }
        // Normalize by the summed incorrect mass rather than 1 - p[g]:
        // identical in exact arithmetic, but it avoids the cancellation
        // that 1 - p[g] suffers when p[g] is near 1, and makes the
        // single-incorrect-class entropy exactly zero.
        let mut s = 0.0;
        for (j, &pj) in prow.iter().enumerate() {
            if j != g {
                s += pj;
            }
        }
        let ln_s = s.ln();
        // entropy of q, with the 0 ln 0 = 0 convention
        let mut entropy = 0.0;
        for j in 0..k {
            if j != g && prow[j] > 0.0 {
                let q = prow[j] / s;
                entropy -= q * q.ln();
            }
        }
        // mathematically >= 0; rounding can leave a ~1e-16 residue
        let entropy = entropy.max(0.0);
        // v[k] = p[k] * dE/dp[k], then the softmax chain rule
        let mut dot = 0.0;
        for (j, out) in grow.iter_mut().enumerate() {
            let v = if j == g {
                prow[g] * (entropy - ln_s - 1.0) / s
            } else if prow[j] > 0.0 {
                -(prow[j] / s) * (lsrow[j] + 1.0)
            } else {
                0.0
            };
            *out = v;
            dot += v;
        }
        for (j, out) in grow.iter_mut().enumerate() {
            *out = (*out - prow[j] * dot) * inv_n;
        }
        *val = entropy;
    });
    let value = per_sample.iter().sum::<f64>() * inv_n;
    Ok(LossReport {
        value,
        grad_logits: grad,
    })
}

fn scaled_report(mut report: LossReport, factor: f64) -> LossReport {
    report.value *= factor;
    report.grad_logits.scale_in_place(factor);
    report
}

/// Complement entropy scaled by `1/(K-1)` so its magnitude is
/// commensurate with cross entropy.
pub fn balanced_complement_entropy(
    probs: &ProbBatch,
    labels: &OneHotBatch,
    cfg: &LossConfig,
) -> Result<LossReport> {
    let raw = complement_entropy(probs, labels, cfg.epsilon)?;
    let factor = 1.0 / (probs.num_classes() - 1) as f64;
    Ok(scaled_report(raw, factor))
}

/// Complement entropy scaled by `gamma/(K-1)`; linear in `gamma`.
pub fn modulated_complement_entropy(
    probs: &ProbBatch,
    labels: &OneHotBatch,
    cfg: &LossConfig,
) -> Result<LossReport> {
    let raw = complement_entropy(probs, labels, cfg.epsilon)?;
    let factor = cfg.gamma / (probs.num_classes() - 1) as f64;
    Ok(scaled_report(raw, factor))
}

/// Cross entropy plus the modulated complement term, composed from a
/// single softmax evaluation. Requires `gamma < 0`: with a negative
/// modulating factor, minimizing the sum maximizes the complement
/// entropy (flattens incorrect-class probabilities); a non-negative one
/// would reward peaked incorrect-class distributions.
pub fn complement_cross_entropy(
    logits: &Matrix,
    labels: &OneHotBatch,
    cfg: &LossConfig,
) -> Result<LossReport> {
    if cfg.gamma >= 0.0 {
        return Err(Error::Config(format!(
            "complement cross entropy needs gamma < 0, got {}",
            cfg.gamma
        )));
    }
    let probs = softmax(logits)?;
    let ce = cross_entropy(&probs, labels)?;
    let comp = modulated_complement_entropy(&probs, labels, cfg)?;
    Ok(LossReport {
        value: ce.value + comp.value,
        grad_logits: ce.grad_logits.add(&comp.grad_logits)?,
    })
}

/// Cross entropy down-weighted on easy samples:
/// `-(1 - p[g])^focal_focus * ln p[g]` per sample.
pub fn focal_loss(probs: &ProbBatch, labels: &OneHotBatch, cfg: &LossConfig) -> Result<LossReport> {
    if cfg.focal_focus < 0.0 {
        return Err(Error::Config(format!(
            "focal_focus must be >= 0, got {}",
            cfg.focal_focus
        )));
    }
    if cfg.focal_focus == 0.0 {
        // exponent zero: identical to plain cross entropy, bit for bit
        return cross_entropy(probs, labels);
    }
    check_pair(probs, labels)?;
    let (n, k) = (probs.num_samples(), probs.num_classes());
    let ls = log_softmax(probs.logits())?;
    let p = probs.probs();
    let inv_n = 1.0 / n as f64;
    let focus = cfg.focal_focus;
    let mut grad = Matrix::zeros(n, k);
    let mut per_sample = vec![0.0; n];
    let label_slice = labels.labels();
    run_rows_scalar(grad.data_mut(), k, &mut per_sample, 2 * k, |i, grow, val| {
        let g = label_slice[i];
        let prow = p.row(i);
        let t = ls.get(i, g);
        let pg = prow[g];
        let a = 1.0 - pg;
        *val = -a.powf(focus) * t;
        let c = if a <= 0.0 {
            0.0 // perfect prediction: gradient limit is zero
        } else {
            focus * a.powf(focus - 1.0) * t * pg - a.powf(focus)
        };
        for (j, out) in grow.iter_mut().enumerate() {
            let indicator = if j == g { 1.0 } else { 0.0 };
            *out = c * (indicator - prow[j]) * inv_n;
        }
    });
    let value = per_sample.iter().sum::<f64>() * inv_n;
    Ok(LossReport {
        value,
        grad_logits: grad,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gradcheck::{central_difference, max_errors};
    use crate::rng::Xoshiro256pp;
    use crate::tensor::one_hot;

    fn assert_close(a: f64, b: f64, tol: f64) {
        assert!((a - b).abs() <= tol, "{a} vs {b} (tol {tol})");
    }

    /// ProbBatch whose softmax equals the given simplex rows (logits are
    /// recovered as ln p).
    fn batch_from_probs(rows: &[Vec<f64>]) -> ProbBatch {
        ProbBatch::from_probs(Matrix::from_rows(rows).unwrap()).unwrap()
    }

    fn labels(ls: &[usize], k: usize) -> OneHotBatch {
        OneHotBatch::new(ls.to_vec(), k).unwrap()
    }

    /// Brute-force scalar oracle: per-sample -Σ q ln q straight from the
    /// definition, no shared code with the implementation.
    fn complement_value_oracle(p: &Matrix, ls: &[usize], epsilon: f64) -> f64 {
        let mut total = 0.0;
        for i in 0..p.rows() {
            let g = ls[i];
            let row = p.row(i);
            let s = 1.0 - row[g];
            if s <= epsilon {
                continue;
            }
            let mut e = 0.0;
            for (j, &pj) in row.iter().enumerate() {
                if j != g && pj > 0.0 {
                    let q = pj / s;
                    e -= q * q.ln();
                }
            }
            total += e;
        }
        total / p.rows() as f64
    }

    fn random_instance(n: usize, k: usize, seed: u64) -> (Matrix, OneHotBatch) {
        let mut rng = Xoshiro256pp::from_seed(seed);
        let data: Vec<f64> = (0..n * k).map(|_| rng.next_range(-5.0, 5.0)).collect();
        let lbls: Vec<usize> = (0..n).map(|_| rng.next_below(k as u64) as usize).collect();
        (
            Matrix::new(n, k, data).unwrap(),
            OneHotBatch::new(lbls, k).unwrap(),
        )
    }

    /// Finite-difference validation of an analytic gradient against the
    /// loss value as a function of the flat logits.
    fn fd_check<F>(value_of: F, analytic: &Matrix, logits: &Matrix, rel_tol: f64, what: &str)
    where
        F: Fn(&[f64]) -> f64,
    {
        let numerical = central_difference(&value_of, logits.data(), 1e-6);
        let (rel, abs) = max_errors(analytic.data(), &numerical, 1e-8);
        assert!(
            rel < rel_tol,
            "{what}: rel err {rel:.3e} (abs {abs:.3e}) exceeds {rel_tol:.1e}"
        );
    }

    #[test]
    fn ce_hand_value() {
        let pb = batch_from_probs(&[vec![0.7, 0.2, 0.1]]);
        let r = cross_entropy(&pb, &labels(&[0], 3)).unwrap();
        assert_close(r.value, 0.356_675, 1e-6);
    }

    #[test]
    fn ce_uniform_is_ln_k() {
        for k in [2usize, 3, 7, 10] {
            let logits = Matrix::zeros(1, k);
            let pb = softmax(&logits).unwrap();
            let r = cross_entropy(&pb, &labels(&[0], k)).unwrap();
            assert_close(r.value, (k as f64).ln(), 1e-12);
        }
    }

    #[test]
    fn ce_perfect_prediction_is_zero() {
        let logits = Matrix::from_rows(&[vec![1000.0, 0.0, 0.0]]).unwrap();
        let pb = softmax(&logits).unwrap();
        let r = cross_entropy(&pb, &labels(&[0], 3)).unwrap();
        assert_eq!(r.value, 0.0);
    }

    #[test]
    fn ce_grad_is_p_minus_y_over_n() {
        let (logits, lbls) = random_instance(4, 5, 11);
        let pb = softmax(&logits).unwrap();
        let r = cross_entropy(&pb, &lbls).unwrap();
        let y = one_hot(&lbls);
        for i in 0..4 {
            let mut row_sum = 0.0;
            for j in 0..5 {
                let expect = (pb.probs().get(i, j) - y.get(i, j)) / 4.0;
                assert_close(r.grad_logits.get(i, j), expect, 1e-15);
                row_sum += r.grad_logits.get(i, j);
            }
            assert!(row_sum.abs() < 1e-9, "grad row sum {row_sum}");
        }
    }

    #[test]
    fn ce_empty_batch_errors() {
        let logits = Matrix::zeros(0, 3);
        let pb = softmax(&logits).unwrap();
        let empty = OneHotBatch::new(vec![], 3).unwrap();
        assert!(matches!(
            cross_entropy(&pb, &empty),
            Err(Error::EmptyBatch)
        ));
    }

    #[test]
    fn ce_shift_invariant_per_row() {
        let (logits, lbls) = random_instance(3, 4, 17);
        let pb = softmax(&logits).unwrap();
        let base = cross_entropy(&pb, &lbls).unwrap().value;
        let shifted_rows: Vec<Vec<f64>> = (0..logits.rows())
            .map(|i| {
                let c = (i as f64 + 1.0) * 3.5;
                logits.row(i).iter().map(|v| v + c).collect()
            })
            .collect();
        let shifted = Matrix::from_rows(&shifted_rows).unwrap();
        let pb2 = softmax(&shifted).unwrap();
        let moved = cross_entropy(&pb2, &lbls).unwrap().value;
        assert_close(base, moved, 1e-9);
    }

    #[test]
    fn complement_symmetric_incorrect_classes() {
        let pb = batch_from_probs(&[vec![0.5, 0.25, 0.25]]);
        let r = complement_entropy(&pb, &labels(&[0], 3), 1e-12).unwrap();
        assert_close(r.value, (2.0f64).ln(), 1e-12);
    }

    #[test]
    fn complement_hand_value_and_oracle() {
        let rows = vec![vec![0.5, 0.3, 0.2]];
        let pb = batch_from_probs(&rows);
        let r = complement_entropy(&pb, &labels(&[0], 3), 1e-12).unwrap();
        assert_close(r.value, 0.673_012, 1e-6);
        let oracle = complement_value_oracle(pb.probs(), &[0], 1e-12);
        assert_close(r.value, oracle, 1e-12);
    }

    #[test]
    fn complement_oracle_agrees_on_random_batches() {
        for seed in 0..10u64 {
            let (logits, lbls) = random_instance(6, 5, 1000 + seed);
            let pb = softmax(&logits).unwrap();
            let r = complement_entropy(&pb, &lbls, 1e-12).unwrap();
            let oracle = complement_value_oracle(pb.probs(), lbls.labels(), 1e-12);
            assert_close(r.value, oracle, 1e-11);
        }
    }

    #[test]
    fn complement_degenerate_sample_contributes_zero() {
        // logits force the first entry to 1 - ~1e-15
        let logits = Matrix::from_rows(&[vec![40.0, 0.0, 0.0]]).unwrap();
        let pb = softmax(&logits).unwrap();
        assert!(1.0 - pb.probs().get(0, 0) <= 1e-12);
        let r = complement_entropy(&pb, &labels(&[0], 3), 1e-12).unwrap();
        assert_eq!(r.value, 0.0);
        assert!(r.grad_logits.data().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn complement_value_within_bounds_on_random_rows() {
        let mut rng = Xoshiro256pp::from_seed(4242);
        for _ in 0..2000 {
            let k = 2 + rng.next_below(9) as usize;
            let data: Vec<f64> = (0..k).map(|_| rng.next_range(-8.0, 8.0)).collect();
            let logits = Matrix::new(1, k, data).unwrap();
            let pb = softmax(&logits).unwrap();
            let g = rng.next_below(k as u64) as usize;
            let r = complement_entropy(&pb, &labels(&[g], k), 1e-12).unwrap();
            let bound = ((k - 1) as f64).ln();
            assert!(
                (0.0..=bound + 1e-12).contains(&r.value),
                "value {} outside [0, {bound}] for k={k}",
                r.value
            );
        }
    }

    #[test]
    fn complement_bound_tight_only_at_uniform() {
        // exactly uniform incorrect classes attain ln(K-1)
        let uniform = batch_from_probs(&[vec![0.4, 0.2, 0.2, 0.2]]);
        let at_bound = complement_entropy(&uniform, &labels(&[0], 4), 1e-12).unwrap();
        assert_close(at_bound.value, (3.0f64).ln(), 1e-9);
        // any imbalance among the incorrect classes stays strictly below
        let skewed = batch_from_probs(&[vec![0.4, 0.26, 0.2, 0.14]]);
        let below = complement_entropy(&skewed, &labels(&[0], 4), 1e-12).unwrap();
        assert!(below.value < (3.0f64).ln() - 1e-9);
    }

    #[test]
    fn balanced_scales_by_k_minus_one() {
        let pb = batch_from_probs(&[vec![0.5, 0.3, 0.2]]);
        let cfg = LossConfig::default();
        let raw = complement_entropy(&pb, &labels(&[0], 3), cfg.epsilon).unwrap();
        let bal = balanced_complement_entropy(&pb, &labels(&[0], 3), &cfg).unwrap();
        assert_close(bal.value, raw.value / 2.0, 1e-15);
        assert_close(bal.value, 0.336_506, 1e-6);
        // K = 2: balancing factor is 1
        let pb2 = batch_from_probs(&[vec![0.7, 0.3]]);
        let raw2 = complement_entropy(&pb2, &labels(&[0], 2), cfg.epsilon).unwrap();
        let bal2 = balanced_complement_entropy(&pb2, &labels(&[0], 2), &cfg).unwrap();
        assert_eq!(bal2.value, raw2.value);
    }

    #[test]
    fn balanced_value_bound() {
        let mut rng = Xoshiro256pp::from_seed(7);
        for _ in 0..200 {
            let k = 2 + rng.next_below(9) as usize;
            let data: Vec<f64> = (0..k).map(|_| rng.next_range(-6.0, 6.0)).collect();
            let logits = Matrix::new(1, k, data).unwrap();
            let pb = softmax(&logits).unwrap();
            let g = rng.next_below(k as u64) as usize;
            let r =
                balanced_complement_entropy(&pb, &labels(&[g], k), &LossConfig::default()).unwrap();
            let bound = ((k - 1) as f64).ln() / (k - 1) as f64;
            assert!((0.0..=bound + 1e-12).contains(&r.value));
        }
    }

    #[test]
    fn modulated_hand_value_and_linearity() {
        let pb = batch_from_probs(&[vec![0.5, 0.3, 0.2]]);
        let lbl = labels(&[0], 3);
        let m1 =
            modulated_complement_entropy(&pb, &lbl, &LossConfig::with_gamma(-1.0)).unwrap();
        assert_close(m1.value, -0.336_506, 1e-6);
        let m2 =
            modulated_complement_entropy(&pb, &lbl, &LossConfig::with_gamma(-2.0)).unwrap();
        assert_eq!(m2.value, 2.0 * m1.value);
        for (a, b) in m2.grad_logits.data().iter().zip(m1.grad_logits.data()) {
            assert_eq!(*a, 2.0 * *b);
        }
        let m0 = modulated_complement_entropy(&pb, &lbl, &LossConfig::with_gamma(0.0)).unwrap();
        assert_eq!(m0.value, 0.0);
        assert!(m0.grad_logits.data().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn cce_hand_value() {
        // logits reproducing p = (0.5, 0.3, 0.2)
        let probs = Matrix::from_rows(&[vec![0.5, 0.3, 0.2]]).unwrap();
        let pb = ProbBatch::from_probs(probs).unwrap();
        let r = complement_cross_entropy(
            pb.logits(),
            &labels(&[0], 3),
            &LossConfig::with_gamma(-1.0),
        )
        .unwrap();
        assert_close(r.value, 0.356_641, 1e-5);
    }

    #[test]
    fn cce_perfect_prediction_is_zero() {
        let logits = Matrix::from_rows(&[vec![1000.0, 0.0, 0.0]]).unwrap();
        let r = complement_cross_entropy(
            &logits,
            &labels(&[0], 3),
            &LossConfig::with_gamma(-1.0),
        )
        .unwrap();
        assert_eq!(r.value, 0.0);
    }

    #[test]
    fn cce_rejects_non_negative_gamma() {
        let logits = Matrix::zeros(1, 3);
        for gamma in [0.0, 0.5] {
            assert!(matches!(
                complement_cross_entropy(
                    &logits,
                    &labels(&[0], 3),
                    &LossConfig::with_gamma(gamma)
                ),
                Err(Error::Config(_))
            ));
        }
    }

    #[test]
    fn cce_equals_composition_exactly() {
        let (logits, lbls) = random_instance(8, 5, 23);
        let cfg = LossConfig::with_gamma(-1.5);
        let whole = complement_cross_entropy(&logits, &lbls, &cfg).unwrap();
        let pb = softmax(&logits).unwrap();
        let ce = cross_entropy(&pb, &lbls).unwrap();
        let comp = modulated_complement_entropy(&pb, &lbls, &cfg).unwrap();
        assert_eq!(whole.value, ce.value + comp.value);
        for (w, (a, b)) in whole
            .grad_logits
            .data()
            .iter()
            .zip(ce.grad_logits.data().iter().zip(comp.grad_logits.data()))
        {
            assert_eq!(*w, a + b);
        }
    }

    #[test]
    fn focal_zero_focus_is_cross_entropy() {
        let (logits, lbls) = random_instance(6, 4, 31);
        let pb = softmax(&logits).unwrap();
        let f = focal_loss(
            &pb,
            &lbls,
            &LossConfig {
                focal_focus: 0.0,
                ..LossConfig::default()
            },
        )
        .unwrap();
        let ce = cross_entropy(&pb, &lbls).unwrap();
        assert_eq!(f.value, ce.value);
        assert_eq!(f.grad_logits, ce.grad_logits);
    }

    #[test]
    fn focal_hand_value() {
        let pb = batch_from_probs(&[vec![0.9, 0.06, 0.04]]);
        let r = focal_loss(&pb, &labels(&[0], 3), &LossConfig::default()).unwrap();
        assert_close(r.value, 0.001_053_6, 1e-7);
    }

    #[test]
    fn focal_perfect_prediction_is_zero() {
        let logits = Matrix::from_rows(&[vec![1000.0, 0.0, 0.0]]).unwrap();
        let pb = softmax(&logits).unwrap();
        let r = focal_loss(&pb, &labels(&[0], 3), &LossConfig::default()).unwrap();
        assert_eq!(r.value, 0.0);
        assert!(r.grad_logits.data().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn focal_rejects_negative_focus() {
        let pb = batch_from_probs(&[vec![0.5, 0.5]]);
        assert!(matches!(
            focal_loss(
                &pb,
                &labels(&[0], 2),
                &LossConfig {
                    focal_focus: -1.0,
                    ..LossConfig::default()
                }
            ),
            Err(Error::Config(_))
        ));
    }

    #[test]
    fn gradients_match_finite_differences() {
        let cfg = LossConfig::default();
        let mut case = 0u64;
        for &k in &[2usize, 5, 10] {
            for &n in &[1usize, 8] {
                case += 1;
                let (logits, lbls) = random_instance(n, k, 7000 + case);

                let pb = softmax(&logits).unwrap();
                let ce = cross_entropy(&pb, &lbls).unwrap();
                fd_check(
                    |x| {
                        let m = Matrix::new(n, k, x.to_vec()).unwrap();
                        cross_entropy(&softmax(&m).unwrap(), &lbls).unwrap().value
                    },
                    &ce.grad_logits,
                    &logits,
                    1e-5,
                    "cross_entropy",
                );

                let comp = complement_entropy(&pb, &lbls, cfg.epsilon).unwrap();
                fd_check(
                    |x| {
                        let m = Matrix::new(n, k, x.to_vec()).unwrap();
                        complement_entropy(&softmax(&m).unwrap(), &lbls, cfg.epsilon)
                            .unwrap()
                            .value
                    },
                    &comp.grad_logits,
                    &logits,
                    1e-5,
                    "complement_entropy",
                );

                let modu = modulated_complement_entropy(&pb, &lbls, &cfg).unwrap();
                fd_check(
                    |x| {
                        let m = Matrix::new(n, k, x.to_vec()).unwrap();
                        modulated_complement_entropy(&softmax(&m).unwrap(), &lbls, &cfg)
                            .unwrap()
                            .value
                    },
                    &modu.grad_logits,
                    &logits,
                    1e-5,
                    "modulated_complement_entropy",
                );

                let cce = complement_cross_entropy(&logits, &lbls, &cfg).unwrap();
                fd_check(
                    |x| {
                        let m = Matrix::new(n, k, x.to_vec()).unwrap();
                        complement_cross_entropy(&m, &lbls, &cfg).unwrap().value
                    },
                    &cce.grad_logits,
                    &logits,
                    1e-5,
                    "complement_cross_entropy",
                );

                let focal = focal_loss(&pb, &lbls, &cfg).unwrap();
                fd_check(
                    |x| {
                        let m = Matrix::new(n, k, x.to_vec()).unwrap();
                        focal_loss(&softmax(&m).unwrap(), &lbls, &cfg).unwrap().value
                    },
                    &focal.grad_logits,
                    &logits,
                    1e-5,
                    "focal_loss",
                );
            }
        }
    }

    #[test]
    fn batch_decomposition_weighted_mean() {
        let cfg = LossConfig::default();
        let (logits, lbls) = random_instance(5, 4, 99);
        let whole = complement_cross_entropy(&logits, &lbls, &cfg).unwrap();
        let mut acc = 0.0;
        for i in 0..5 {
            let row = Matrix::from_rows(&[logits.row(i).to_vec()]).unwrap();
            let lone = OneHotBatch::new(vec![lbls.labels()[i]], 4).unwrap();
            acc += complement_cross_entropy(&row, &lone, &cfg).unwrap().value;
        }
        assert_close(whole.value, acc / 5.0, 1e-9);

        let pb = softmax(&logits).unwrap();
        let whole_ce = cross_entropy(&pb, &lbls).unwrap();
        let mut acc_ce = 0.0;
        for i in 0..5 {
            let row = Matrix::from_rows(&[logits.row(i).to_vec()]).unwrap();
            let lone = OneHotBatch::new(vec![lbls.labels()[i]], 4).unwrap();
            acc_ce += cross_entropy(&softmax(&row).unwrap(), &lone).unwrap().value;
        }
        assert_close(whole_ce.value, acc_ce / 5.0, 1e-9);
    }

    #[test]
    fn epsilon_outside_range_rejected() {
        let pb = batch_from_probs(&[vec![0.5, 0.5]]);
        for eps in [0.0, -1e-9, 1e-3] {
            assert!(matches!(
                complement_entropy(&pb, &labels(&[0], 2), eps),
                Err(Error::InvalidParameter(_))
            ));
        }
    }
}
