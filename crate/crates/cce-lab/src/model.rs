//! From-scratch multilayer perceptron with hand-derived backprop.
//!
//! ReLU on hidden layers, identity on the output layer (the network
//! emits logits). `forward` caches activations for one `backward` call;
//! `predict` is the pure inference path. Gradients are validated
//! against finite differences in the test suite.

use crate::error::{Error, Result};
use crate::rng::Xoshiro256pp;
use crate::tensor::Matrix;
use serde::{Deserialize, Serialize};
use std::path::Path;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct DenseLayer {
    weights: Matrix, // fan_in x fan_out
    bias: Vec<f64>,
}

/// Gradients for every layer's weights and biases, ordered input to
/// output.
#[derive(Debug, Clone, PartialEq)]
pub struct ParameterGradients {
    pub weights: Vec<Matrix>,
    pub biases: Vec<Vec<f64>>,
}

impl ParameterGradients {
    pub fn all_finite(&self) -> bool {
        self.weights.iter().all(|w| w.all_finite())
            && self
                .biases
                .iter()
                .all(|b| b.iter().all(|v| v.is_finite()))
    }
}

/// Multilayer perceptron over row-vector samples.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MlpModel {
    layer_dims: Vec<usize>,
    layers: Vec<DenseLayer>,
    #[serde(skip)]
    cache: Option<Vec<Matrix>>,
}

impl MlpModel {
    /// Builds a model with seeded fan-in-scaled uniform init:
    /// `U(-1/sqrt(fan_in), 1/sqrt(fan_in))` for weights, zero biases.
    pub fn new(layer_dims: &[usize], seed: u64) -> Result<Self> {
        if layer_dims.len() < 2 {
            return Err(Error::InvalidShape(
                "model needs at least input and output dims".to_string(),
            ));
        }
        if layer_dims.iter().any(|&d| d == 0) {
            return Err(Error::InvalidShape("zero-width layer".to_string()));
        }
        let mut rng = Xoshiro256pp::from_seed(seed);
        let mut layers = Vec::with_capacity(layer_dims.len() - 1);
        for pair in layer_dims.windows(2) {
            let (fan_in, fan_out) = (pair[0], pair[1]);
            let bound = 1.0 / (fan_in as f64).sqrt();
            let data: Vec<f64> = (0..fan_in * fan_out)
                .map(|_| rng.next_range(-bound, bound))
                .collect();
            layers.push(DenseLayer {
                weights: Matrix::new(fan_in, fan_out, data)?,
                bias: vec![0.0; fan_out],
            });
        }
        Ok(MlpModel {
            layer_dims: layer_dims.to_vec(),
            layers,
            cache: None,
        })
    }

    pub fn layer_dims(&self) -> &[usize] {
        &self.layer_dims
    }

    pub fn num_layers(&self) -> usize {
        self.layers.len()
    }

    pub fn input_dim(&self) -> usize {
        self.layer_dims[0]
    }

    pub fn output_dim(&self) -> usize {
        *self.layer_dims.last().unwrap()
    }

    pub fn weights(&self, layer: usize) -> &Matrix {
        &self.layers[layer].weights
    }

    pub fn bias(&self, layer: usize) -> &[f64] {
        &self.layers[layer].bias
    }

    pub(crate) fn weights_mut(&mut self, layer: usize) -> &mut Matrix {
        &mut self.layers[layer].weights
    }

    pub(crate) fn bias_mut(&mut self, layer: usize) -> &mut Vec<f64> {
        &mut self.layers[layer].bias
    }

    pub fn all_finite(&self) -> bool {
        self.layers.iter().all(|l| {
            l.weights.all_finite() && l.bias.iter().all(|v| v.is_finite())
        })
    }

    fn propagate(&self, inputs: &Matrix, keep: bool) -> Result<(Matrix, Vec<Matrix>)> {
        if inputs.cols() != self.input_dim() {
            return Err(Error::InvalidShape(format!(
                "{} input columns, model expects {}",
                inputs.cols(),
                self.input_dim()
            )));
        }
        let mut acts = Vec::new();
        if keep {
            acts.push(inputs.clone());
        }
        let mut current = inputs.clone();
        let last = self.layers.len() - 1;
        for (i, layer) in self.layers.iter().enumerate() {
            let mut z = current.matmul(&layer.weights)?;
            z.add_row_bias(&layer.bias)?;
            if i == last {
                return Ok((z, acts));
            }
            current = z.relu();
            if keep {
                acts.push(current.clone());
            }
        }
        unreachable!("models always hold at least one layer")
    }

    /// Logits for a batch, caching activations for one `backward`.
    pub fn forward(&mut self, inputs: &Matrix) -> Result<Matrix> {
        let (logits, acts) = self.propagate(inputs, true)?;
        self.cache = Some(acts);
        Ok(logits)
    }

    /// Pure inference: logits without touching the backward cache.
    pub fn predict(&self, inputs: &Matrix) -> Result<Matrix> {
        Ok(self.propagate(inputs, false)?.0)
    }

    /// Backpropagates a logit gradient through the cached forward pass,
    /// consuming the cache.
    pub fn backward(&mut self, grad_logits: &Matrix) -> Result<ParameterGradients> {
        let acts = self.cache.take().ok_or_else(|| {
            Error::State("backward without a cached forward pass".to_string())
        })?;
        if grad_logits.rows() != acts[0].rows() || grad_logits.cols() != self.output_dim() {
            return Err(Error::InvalidShape(format!(
                "grad {}x{} vs batch {} and output dim {}",
                grad_logits.rows(),
                grad_logits.cols(),
                acts[0].rows(),
                self.output_dim()
            )));
        }
        let n_layers = self.layers.len();
        let mut weights = vec![Matrix::zeros(0, 0); n_layers];
        let mut biases = vec![Vec::new(); n_layers];
        let mut g = grad_logits.clone();
        for i in (0..n_layers).rev() {
            weights[i] = acts[i].t_matmul(&g)?;
            biases[i] = g.column_sums();
            if i > 0 {
                let upstream = g.matmul_t(&self.layers[i].weights)?;
                g = upstream.relu_backward_mask(&acts[i])?;
            }
        }
        Ok(ParameterGradients { weights, biases })
    }

    /// Writes the model as a JSON checkpoint (layer dims plus parameter
    /// arrays); `f64` values round-trip exactly.
    pub fn save_checkpoint(&self, path: &Path) -> Result<()> {
        let file = std::fs::File::create(path)?;
        serde_json::to_writer(std::io::BufWriter::new(file), self)?;
        Ok(())
    }

    pub fn load_checkpoint(path: &Path) -> Result<MlpModel> {
        let file = std::fs::File::open(path)?;
        let model: MlpModel = serde_json::from_reader(std::io::BufReader::new(file))?;
        if model.layer_dims.len() < 2
            || model.layers.len() != model.layer_dims.len() - 1
            || model
                .layers
                .iter()
                .zip(model.layer_dims.windows(2))
                .any(|(l, d)| l.weights.rows() != d[0] || l.weights.cols() != d[1])
            || !model.all_finite()
        {
            return Err(Error::Format(format!(
                "inconsistent checkpoint {}",
                path.display()
            )));
        }
        Ok(model)
    }
}
