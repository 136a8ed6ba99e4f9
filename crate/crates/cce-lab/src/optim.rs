//! SGD with momentum and weight decay, plus the warm-up / step-decay
//! learning-rate schedule.
//!
//! Classical (non-Nesterov) momentum with weight decay folded into the
//! gradient: `v <- momentum*v + g + weight_decay*theta`,
//! `theta <- theta - lr*v`. An ascending step negates the raw gradient
//! and then applies the same rule, so ascent on a loss is bit-identical
//! to descent on its negation and weight decay still decays.

use crate::error::{Error, Result};
use crate::model::{MlpModel, ParameterGradients};
use crate::tensor::Matrix;
use serde::{Deserialize, Serialize};

/// Optimizer hyperparameters and schedule.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SgdConfig {
    pub base_lr: f64,
    pub momentum: f64,
    pub weight_decay: f64,
    /// Linear warm-up span; epoch `e < warmup_epochs` trains at
    /// `base_lr * (e+1)/warmup_epochs`.
    pub warmup_epochs: usize,
    /// Epochs at which the rate is multiplied by `decay_factor`.
    pub decay_epochs: Vec<usize>,
    pub decay_factor: f64,
}

impl Default for SgdConfig {
    fn default() -> Self {
        SgdConfig {
            base_lr: 0.1,
            momentum: 0.9,
            weight_decay: 5e-4,
            warmup_epochs: 5,
            decay_epochs: vec![60, 120, 160],
            decay_factor: 0.5,
        }
    }
}

impl SgdConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.base_lr > 0.0 && self.base_lr.is_finite()) {
            return Err(Error::Config(format!("base_lr {} must be > 0", self.base_lr)));
        }
        if !(0.0..1.0).contains(&self.momentum) {
            return Err(Error::Config(format!(
                "momentum {} outside [0, 1)",
                self.momentum
            )));
        }
        if !(self.decay_factor > 0.0 && self.decay_factor <= 1.0) {
            return Err(Error::Config(format!(
                "decay_factor {} outside (0, 1]",
                self.decay_factor
            )));
        }
        if self.weight_decay < 0.0 || !self.weight_decay.is_finite() {
            return Err(Error::Config(format!(
                "weight_decay {} must be >= 0",
                self.weight_decay
            )));
        }
        Ok(())
    }
}

/// Learning rate at a given epoch: linear warm-up, then step decay by
/// the number of passed milestones.
pub fn lr_at(cfg: &SgdConfig, epoch: usize) -> f64 {
    if epoch < cfg.warmup_epochs {
        return cfg.base_lr * (epoch + 1) as f64 / cfg.warmup_epochs as f64;
    }
    let drops = cfg.decay_epochs.iter().filter(|&&d| epoch >= d).count();
    cfg.base_lr * cfg.decay_factor.powi(drops as i32)
}

/// Rescales decay milestones defined against a reference epoch budget
/// onto a shorter (or longer) run: `round(milestone * epochs / reference)`,
/// zero-milestones dropped.
pub fn scale_milestones(milestones: &[usize], epochs: usize, reference: usize) -> Vec<usize> {
    milestones
        .iter()
        .map(|&m| ((m * epochs) as f64 / reference as f64).round() as usize)
        .filter(|&m| m > 0)
        .collect()
}

/// Update direction: descend minimizes the objective the gradients came
/// from, ascend maximizes it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StepDirection {
    Descend,
    Ascend,
}

/// SGD state: one velocity buffer per parameter tensor, persisted
/// across steps. Training regimes that interleave two objectives hold
/// two optimizers with independent velocity.
#[derive(Debug, Clone)]
pub struct SgdOptimizer {
    cfg: SgdConfig,
    velocity: Option<(Vec<Matrix>, Vec<Vec<f64>>)>,
}

impl SgdOptimizer {
    pub fn new(cfg: SgdConfig) -> Self {
        SgdOptimizer {
            cfg,
            velocity: None,
        }
    }

    pub fn config(&self) -> &SgdConfig {
        &self.cfg
    }

    /// One parameter update. Errors on non-finite gradients and on
    /// non-finite parameters after the update (diverged run).
    pub fn step(
        &mut self,
        model: &mut MlpModel,
        grads: &ParameterGradients,
        lr: f64,
        direction: StepDirection,
    ) -> Result<()> {
        if !grads.all_finite() {
            return Err(Error::Numeric(
                "non-finite gradients reached the optimizer".to_string(),
            ));
        }
        if grads.weights.len() != model.num_layers() {
            return Err(Error::InvalidShape(format!(
                "{} gradient layers for a {}-layer model",
                grads.weights.len(),
                model.num_layers()
            )));
        }
        let velocity = self.velocity.get_or_insert_with(|| {
            let w = (0..model.num_layers())
                .map(|i| Matrix::zeros(model.weights(i).rows(), model.weights(i).cols()))
                .collect();
            let b = (0..model.num_layers())
                .map(|i| vec![0.0; model.bias(i).len()])
                .collect();
            (w, b)
        });
        let sign = match direction {
            StepDirection::Descend => 1.0,
            StepDirection::Ascend => -1.0,
        };
        let (momentum, wd) = (self.cfg.momentum, self.cfg.weight_decay);
        for layer in 0..model.num_layers() {
            {
                let theta = model.weights_mut(layer);
                let v = &mut velocity.0[layer];
                for ((v, &g), t) in v
                    .data_mut()
                    .iter_mut()
                    .zip(grads.weights[layer].data())
                    .zip(theta.data_mut())
                {
                    *v = momentum * *v + sign * g + wd * *t;
                    *t -= lr * *v;
                }
            }
            {
                let theta = model.bias_mut(layer);
                let v = &mut velocity.1[layer];
                for ((v, &g), t) in v
                    .iter_mut()
                    .zip(&grads.biases[layer])
                    .zip(theta.iter_mut())
                {
                    *v = momentum * *v + sign * g + wd * *t;
                    *t -= lr * *v;
                }
            }
        }
        if !model.all_finite() {
            return Err(Error::Numeric(
                "parameters diverged to non-finite values".to_string(),
            ));
        }
        Ok(())
    }
}
