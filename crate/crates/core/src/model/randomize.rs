//! Cascading parameter randomization, output layer first.
//!
//! Layer at cascade depth `j` (0 = output layer) draws from child stream `j`
//! of the supplied stream, so the randomized weights of a layer are the same
//! for every `k > j`: increasing `k` only adds newly randomized layers.

use serde::{Deserialize, Serialize};

use super::{Layer, LayeredModel};
use crate::error::{Error, Result};
use crate::rng::RngStream;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BiasPolicy {
    /// Biases of randomized layers are set to zero.
    #[default]
    Zero,
    /// Biases are re-drawn from the same range as the weights.
    Redraw,
}

/// Glorot-uniform limit `sqrt(6 / (fan_in + fan_out))`.
pub(crate) fn glorot_limit(fan_in: usize, fan_out: usize) -> f64 {
    (6.0 / (fan_in + fan_out) as f64).sqrt()
}

pub(crate) fn fill_uniform(values: &mut [f32], limit: f64, rng: &mut RngStream) {
    for v in values {
        *v = rng.uniform(-limit, limit) as f32;
    }
}

pub fn randomize_layers(model: &LayeredModel, k: usize, rng: &RngStream) -> Result<LayeredModel> {
    randomize_layers_with(model, k, rng, BiasPolicy::Zero)
}

pub fn randomize_layers_with(
    model: &LayeredModel,
    k: usize,
    rng: &RngStream,
    bias: BiasPolicy,
) -> Result<LayeredModel> {
    let order = model.parameterized_layers();
    if k > order.len() {
        return Err(Error::arg(format!(
            "cannot randomize {k} layers of a model with {} parameterized layers",
            order.len()
        )));
    }
    let mut layers = model.layers().to_vec();
    for (depth, &idx) in order.iter().take(k).enumerate() {
        let mut stream = rng.child(depth as u64);
        let layer: &mut Layer = &mut layers[idx];
        let (fan_in, fan_out) = layer.fans().expect("parameterized");
        let limit = glorot_limit(fan_in, fan_out);
        let (weights, biases) = layer.params_mut().expect("parameterized");
        fill_uniform(weights, limit, &mut stream);
        match bias {
            BiasPolicy::Zero => biases.iter_mut().for_each(|b| *b = 0.0),
            BiasPolicy::Redraw => fill_uniform(biases, limit, &mut stream),
        }
    }
    LayeredModel::new(model.input_shape(), layers)
}
