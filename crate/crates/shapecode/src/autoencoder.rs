//! Deep autoencoder: unfolding a pretrained stack, backprop fine-tuning, and
//! code extraction.
//!
//! Unfolding mirrors the stack: encoder layer k starts from the k-th RBM's
//! weights and hidden bias, the matching decoder layer from the transposed
//! weights and the visible bias. The code layer (encoder output) is linear;
//! every other layer, including the reconstruction output, is logistic.
//! Fine-tuning runs plain mini-batch gradient descent on the squared
//! reconstruction error, which shares its minimizer with the root-mean-square
//! error it reports.

use ndarray::{Array1, Array2, ArrayView1, ArrayView2, Axis};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::dbn::DbnStack;
use crate::error::{Error, Result};

/// Per-layer nonlinearity.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Activation {
    Sigmoid,
    Linear,
}

/// One dense layer: `output = activation(input . weights + bias)`.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseLayer {
    pub weights: Array2<f64>,
    pub bias: Array1<f64>,
    pub activation: Activation,
}

impl DenseLayer {
    pub fn input_dim(&self) -> usize {
        self.weights.nrows()
    }

    pub fn output_dim(&self) -> usize {
        self.weights.ncols()
    }

    fn apply_batch(&self, input: ArrayView2<f64>) -> Array2<f64> {
        let mut act = input.dot(&self.weights) + &self.bias;
        if self.activation == Activation::Sigmoid {
            act.mapv_inplace(|x| 1.0 / (1.0 + (-x).exp()));
        }
        act
    }
}

/// Encoder + decoder stack; `layers[..code_depth]` is the encoder and the
/// code layer output has dimension `code_dim()`.
#[derive(Debug, Clone, PartialEq)]
pub struct AutoencoderNet {
    pub layers: Vec<DenseLayer>,
    pub code_depth: usize,
}

impl AutoencoderNet {
    /// Assemble a network from explicit layers, checking that consecutive
    /// dimensions chain and that encoder/decoder dimensions mirror exactly.
    pub fn from_layers(layers: Vec<DenseLayer>, code_depth: usize) -> Result<Self> {
        if layers.is_empty() || code_depth == 0 || code_depth >= layers.len() + 1 {
            return Err(Error::InvalidInput(
                "autoencoder needs a non-empty encoder and decoder".into(),
            ));
        }
        if layers.len() != 2 * code_depth {
            return Err(Error::DimensionMismatch(format!(
                "{} layers do not mirror around a code layer at depth {code_depth}",
                layers.len()
            )));
        }
        for pair in layers.windows(2) {
            if pair[0].output_dim() != pair[1].input_dim() {
                return Err(Error::DimensionMismatch(format!(
                    "layer output {} feeds layer input {}",
                    pair[0].output_dim(),
                    pair[1].input_dim()
                )));
            }
        }
        let n = layers.len();
        for i in 0..code_depth {
            let enc = &layers[i];
            let dec = &layers[n - 1 - i];
            if enc.input_dim() != dec.output_dim() || enc.output_dim() != dec.input_dim() {
                return Err(Error::DimensionMismatch(format!(
                    "encoder layer {i} ({}->{}) does not mirror decoder layer {} ({}->{})",
                    enc.input_dim(),
                    enc.output_dim(),
                    n - 1 - i,
                    dec.input_dim(),
                    dec.output_dim()
                )));
            }
        }
        Ok(AutoencoderNet { layers, code_depth })
    }

    pub fn input_dim(&self) -> usize {
        self.layers[0].input_dim()
    }

    pub fn code_dim(&self) -> usize {
        self.layers[self.code_depth - 1].output_dim()
    }

    fn check_input(&self, len: usize) -> Result<()> {
        if len != self.input_dim() {
            return Err(Error::DimensionMismatch(format!(
                "input length {} vs network input dim {}",
                len,
                self.input_dim()
            )));
        }
        Ok(())
    }

    fn all_finite(&self) -> bool {
        self.layers.iter().all(|l| {
            l.weights.iter().all(|x| x.is_finite()) && l.bias.iter().all(|x| x.is_finite())
        })
    }
}

/// Unfold a pretrained stack into encoder + transposed decoder. Before any
/// fine-tuning the encoder half reproduces the stack's deterministic upward
/// pass exactly.
pub fn unfold(stack: &DbnStack) -> AutoencoderNet {
    let depth = stack.layers.len();
    let mut layers = Vec::with_capacity(2 * depth);
    for (k, rbm) in stack.layers.iter().enumerate() {
        layers.push(DenseLayer {
            weights: rbm.weights.clone(),
            bias: rbm.hidden_bias.clone(),
            activation: if k + 1 == depth {
                Activation::Linear // code layer
            } else {
                Activation::Sigmoid
            },
        });
    }
    for rbm in stack.layers.iter().rev() {
        layers.push(DenseLayer {
            weights: rbm.weights.t().to_owned(),
            bias: rbm.visible_bias.clone(),
            activation: Activation::Sigmoid,
        });
    }
    AutoencoderNet { layers, code_depth: depth }
}

/// Forward pass over a batch, keeping every layer output (index 0 is the
/// input itself).
fn forward_batch(net: &AutoencoderNet, batch: ArrayView2<f64>) -> Vec<Array2<f64>> {
    let mut outputs = Vec::with_capacity(net.layers.len() + 1);
    outputs.push(batch.to_owned());
    for layer in &net.layers {
        let next = layer.apply_batch(outputs.last().unwrap().view());
        outputs.push(next);
    }
    outputs
}

/// Full reconstruction of one input vector.
pub fn reconstruct(net: &AutoencoderNet, v: ArrayView1<f64>) -> Result<Array1<f64>> {
    net.check_input(v.len())?;
    let batch = v.insert_axis(Axis(0));
    let out = forward_batch(net, batch);
    Ok(out.last().unwrap().row(0).to_owned())
}

/// Encoder half only: the code vector of one input.
pub fn encode(net: &AutoencoderNet, v: ArrayView1<f64>) -> Result<Array1<f64>> {
    net.check_input(v.len())?;
    let mut current = v.to_owned();
    for layer in &net.layers[..net.code_depth] {
        current = layer
            .apply_batch(current.view().insert_axis(Axis(0)))
            .row(0)
            .to_owned();
    }
    Ok(current)
}

/// Row-per-sample version of [`encode`].
pub fn encode_batch(net: &AutoencoderNet, data: ArrayView2<f64>) -> Result<Array2<f64>> {
    net.check_input(data.ncols())?;
    let mut current = data.to_owned();
    for layer in &net.layers[..net.code_depth] {
        current = layer.apply_batch(current.view());
    }
    Ok(current)
}

/// Batch loss minimized by fine-tuning: half the mean (over rows) squared
/// reconstruction error.
pub fn batch_loss(net: &AutoencoderNet, batch: ArrayView2<f64>) -> Result<f64> {
    net.check_input(batch.ncols())?;
    let outputs = forward_batch(net, batch);
    let recon = outputs.last().unwrap();
    let n = batch.nrows() as f64;
    Ok(recon
        .iter()
        .zip(batch.iter())
        .map(|(y, x)| (y - x) * (y - x))
        .sum::<f64>()
        * 0.5
        / n)
}

/// Root-mean-square reconstruction error over a dataset: the square root of
/// the mean per-sample squared error.
pub fn dataset_rmse(net: &AutoencoderNet, data: ArrayView2<f64>) -> Result<f64> {
    net.check_input(data.ncols())?;
    let outputs = forward_batch(net, data);
    let recon = outputs.last().unwrap();
    let n = data.nrows() as f64;
    let mean_sq = recon
        .iter()
        .zip(data.iter())
        .map(|(y, x)| (y - x) * (y - x))
        .sum::<f64>()
        / n;
    Ok(mean_sq.sqrt())
}

/// Per-layer `(weight, bias)` gradients of [`batch_loss`], computed by
/// backpropagation through the sigmoid and linear layers.
pub fn batch_gradient(
    net: &AutoencoderNet,
    batch: ArrayView2<f64>,
) -> Result<Vec<(Array2<f64>, Array1<f64>)>> {
    net.check_input(batch.ncols())?;
    let outputs = forward_batch(net, batch);
    let n = batch.nrows() as f64;

    // delta at the output layer: (recon - data) / n, through the activation
    let mut delta = (outputs.last().unwrap() - &batch) / n;
    apply_activation_derivative(&mut delta, outputs.last().unwrap(), net.layers.last().unwrap());

    let mut grads = vec![None; net.layers.len()];
    for l in (0..net.layers.len()).rev() {
        let input = &outputs[l];
        let grad_w = input.t().dot(&delta);
        let grad_b = delta.sum_axis(Axis(0));
        grads[l] = Some((grad_w, grad_b));
        if l > 0 {
            let mut prev_delta = delta.dot(&net.layers[l].weights.t());
            apply_activation_derivative(&mut prev_delta, &outputs[l], &net.layers[l - 1]);
            delta = prev_delta;
        }
    }
    Ok(grads.into_iter().map(Option::unwrap).collect())
}

fn apply_activation_derivative(delta: &mut Array2<f64>, output: &Array2<f64>, layer: &DenseLayer) {
    if layer.activation == Activation::Sigmoid {
        delta.zip_mut_with(output, |d, &y| *d *= y * (1.0 - y));
    }
}

/// Hyperparameters for backprop fine-tuning.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct FinetuneConfig {
    pub learning_rate: f64,
    pub epochs: usize,
    pub minibatch_size: usize,
    pub rng_seed: u64,
}

impl Default for FinetuneConfig {
    fn default() -> Self {
        FinetuneConfig {
            learning_rate: 0.01,
            epochs: 100,
            minibatch_size: 100,
            rng_seed: 0,
        }
    }
}

impl FinetuneConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate >= 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "learning rate must be finite and >= 0, got {}",
                self.learning_rate
            )));
        }
        if self.epochs == 0 || self.minibatch_size == 0 {
            return Err(Error::InvalidConfig(
                "epochs and minibatch size must be >= 1".into(),
            ));
        }
        Ok(())
    }
}

/// Mini-batch gradient descent on the reconstruction loss. Rows are shuffled
/// each epoch with the seeded generator; the run is deterministic under the
/// seed. Returns the tuned network and the dataset RMSE recorded after each
/// epoch. Fails with the epoch index if parameters stop being finite.
pub fn finetune(
    net: AutoencoderNet,
    data: ArrayView2<f64>,
    cfg: &FinetuneConfig,
) -> Result<(AutoencoderNet, Vec<f64>)> {
    cfg.validate()?;
    net.check_input(data.ncols())?;
    if data.nrows() == 0 {
        return Err(Error::InvalidInput("empty fine-tuning set".into()));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.rng_seed);
    let mut net = net;
    let mut order: Vec<usize> = (0..data.nrows()).collect();
    let mut curve = Vec::with_capacity(cfg.epochs);

    for epoch in 0..cfg.epochs {
        order.shuffle(&mut rng);
        for chunk in order.chunks(cfg.minibatch_size) {
            let batch = data.select(Axis(0), chunk);
            let grads = batch_gradient(&net, batch.view())?;
            for (layer, (gw, gb)) in net.layers.iter_mut().zip(grads) {
                layer.weights.scaled_add(-cfg.learning_rate, &gw);
                layer.bias.scaled_add(-cfg.learning_rate, &gb);
            }
        }
        if !net.all_finite() {
            return Err(Error::TrainingDiverged(format!(
                "fine-tuning produced non-finite parameters in epoch {epoch}"
            )));
        }
        curve.push(dataset_rmse(&net, data)?);
    }
    Ok((net, curve))
}
