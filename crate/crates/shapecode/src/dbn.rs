//! Greedy layer-wise pretraining of a stack of RBMs.
//!
//! Layer 0 trains on the raw data; each later layer trains on the
//! deterministic hidden activation probabilities of the layer below applied
//! to that layer's own training input. Every layer has binary hidden units
//! except the last, whose Gaussian-linear units carry the real-valued code.

use ndarray::{Array1, Array2, ArrayView1, ArrayView2};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::rbm::{self, CdConfig, RbmLayer, UnitKind};

/// Layer sizes used for the Princeton benchmark configuration.
pub fn psb_layer_sizes() -> Vec<usize> {
    vec![5184, 1000, 500, 250, 30]
}

/// Layer sizes used for the Engineering benchmark configuration.
pub fn esb_layer_sizes() -> Vec<usize> {
    vec![5184, 2000, 500, 100, 20]
}

/// An ordered stack of RBMs with chained dimensions.
#[derive(Debug, Clone, PartialEq)]
pub struct DbnStack {
    pub layers: Vec<RbmLayer>,
}

impl DbnStack {
    /// Validate chaining (each hidden count feeds the next visible count) and
    /// unit kinds (Gaussian-linear exactly at the top).
    pub fn new(layers: Vec<RbmLayer>) -> Result<Self> {
        if layers.is_empty() {
            return Err(Error::InvalidInput("stack needs at least one layer".into()));
        }
        for (k, pair) in layers.windows(2).enumerate() {
            if pair[0].hidden_count() != pair[1].visible_count() {
                return Err(Error::DimensionMismatch(format!(
                    "layer {} hidden count {} vs layer {} visible count {}",
                    k,
                    pair[0].hidden_count(),
                    k + 1,
                    pair[1].visible_count()
                )));
            }
        }
        let last = layers.len() - 1;
        for (k, layer) in layers.iter().enumerate() {
            let expected = if k == last {
                UnitKind::GaussianLinear
            } else {
                UnitKind::Binary
            };
            if layer.hidden_kind != expected {
                return Err(Error::InvalidInput(format!(
                    "layer {k} has {:?} hidden units, expected {expected:?}",
                    layer.hidden_kind
                )));
            }
        }
        Ok(DbnStack { layers })
    }

    /// `[input, hidden_0, ..., code]` sizes.
    pub fn layer_sizes(&self) -> Vec<usize> {
        let mut sizes = vec![self.layers[0].visible_count()];
        sizes.extend(self.layers.iter().map(|l| l.hidden_count()));
        sizes
    }

    pub fn input_dim(&self) -> usize {
        self.layers[0].visible_count()
    }

    pub fn code_dim(&self) -> usize {
        self.layers[self.layers.len() - 1].hidden_count()
    }
}

/// Per-layer CD configs for a size list: learning rate 0.1 for the binary
/// layers, 0.001 for the Gaussian-linear top layer; layer seeds derive from
/// `base_seed` so each layer draws an independent stream.
pub fn default_layer_configs(
    sizes: &[usize],
    epochs: usize,
    minibatch_size: usize,
    base_seed: u64,
) -> Vec<CdConfig> {
    let layer_count = sizes.len().saturating_sub(1);
    (0..layer_count)
        .map(|k| CdConfig {
            learning_rate: if k + 1 == layer_count { 0.001 } else { 0.1 },
            epochs,
            minibatch_size,
            rng_seed: base_seed.wrapping_add(k as u64),
            ..CdConfig::default()
        })
        .collect()
}

/// A pretrained stack plus the per-layer reconstruction-error curves.
#[derive(Debug, Clone)]
pub struct Pretrained {
    pub stack: DbnStack,
    /// `curves[k][e]` is layer k's mean reconstruction error in epoch e.
    pub curves: Vec<Vec<f64>>,
}

/// Greedy pretraining. `sizes` lists the visible dimension followed by every
/// hidden dimension; `configs` must supply one CD config per trained layer.
/// Data values must lie in [0,1]. A divergence in layer k aborts with that
/// layer index in the error.
pub fn pretrain(data: ArrayView2<f64>, sizes: &[usize], configs: &[CdConfig]) -> Result<Pretrained> {
    if sizes.len() < 2 {
        return Err(Error::InvalidConfig(
            "need at least an input size and one hidden size".into(),
        ));
    }
    let layer_count = sizes.len() - 1;
    if configs.len() != layer_count {
        return Err(Error::InvalidConfig(format!(
            "{} layer configs supplied for {} layers",
            configs.len(),
            layer_count
        )));
    }
    if data.ncols() != sizes[0] {
        return Err(Error::DimensionMismatch(format!(
            "data columns {} vs input size {}",
            data.ncols(),
            sizes[0]
        )));
    }
    if data.iter().any(|&x| !(0.0..=1.0).contains(&x)) {
        return Err(Error::InvalidInput(
            "pretraining data must lie in [0,1]".into(),
        ));
    }

    let mut layers = Vec::with_capacity(layer_count);
    let mut curves = Vec::with_capacity(layer_count);
    let mut input = data.to_owned();
    for k in 0..layer_count {
        let kind = if k + 1 == layer_count {
            UnitKind::GaussianLinear
        } else {
            UnitKind::Binary
        };
        let mut init_rng = ChaCha8Rng::seed_from_u64(configs[k].rng_seed ^ 0x5eed_1e55_0000_0000);
        let fresh = RbmLayer::new(sizes[k], sizes[k + 1], kind, &mut init_rng);
        let (trained, curve) = rbm::train(fresh, input.view(), &configs[k]).map_err(|e| match e {
            Error::TrainingDiverged(msg) => Error::TrainingDiverged(format!("layer {k}: {msg}")),
            other => other,
        })?;
        // Next layer trains on this layer's deterministic activations.
        if k + 1 < layer_count {
            input = trained.hidden_given_visible_batch(input.view())?;
        }
        layers.push(trained);
        curves.push(curve);
    }

    Ok(Pretrained {
        stack: DbnStack::new(layers)?,
        curves,
    })
}

/// Deterministic bottom-to-top pass: sigmoid means through the binary
/// layers, the noiseless linear mean out of the top layer. This is the
/// pre-fine-tuning code of an input vector.
pub fn propagate_up(stack: &DbnStack, v: ArrayView1<f64>) -> Result<Array1<f64>> {
    if v.len() != stack.input_dim() {
        return Err(Error::DimensionMismatch(format!(
            "input length {} vs stack input dim {}",
            v.len(),
            stack.input_dim()
        )));
    }
    let mut current = v.to_owned();
    for layer in &stack.layers {
        current = layer.hidden_given_visible(current.view())?;
    }
    Ok(current)
}

/// Row-per-sample version of [`propagate_up`].
pub fn propagate_up_batch(stack: &DbnStack, data: ArrayView2<f64>) -> Result<Array2<f64>> {
    if data.ncols() != stack.input_dim() {
        return Err(Error::DimensionMismatch(format!(
            "data columns {} vs stack input dim {}",
            data.ncols(),
            stack.input_dim()
        )));
    }
    let mut current = data.to_owned();
    for layer in &stack.layers {
        current = layer.hidden_given_visible_batch(current.view())?;
    }
    Ok(current)
}
