//! Feed-forward inference engine and the black-box model contract.
//!
//! Explainers only ever see [`BlackBoxModel`]: an image goes in, a
//! [`ConfidenceOutput`] (logits plus softmax probabilities) comes out.
//! [`LayeredModel`] is the concrete network used for the oracle models and
//! for cascading parameter randomization.

mod format;
mod randomize;
mod zoo;

pub use format::{decode_model, encode_model, read_model, write_model, MODEL_MAGIC};
pub use randomize::{randomize_layers, randomize_layers_with, BiasPolicy};
pub use zoo::{
    build_constant_model, build_dqn_toy, build_maze_model, build_planted_dqn, build_planted_model,
    planted_dqn_support, ConstantModel, MazeLayout, DQN_INPUT_SHAPE,
};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tensor::Image;

/// Logits and softmax probabilities for one input.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConfidenceOutput {
    pub logits: Vec<f64>,
    pub probabilities: Vec<f64>,
    /// Argmax of `probabilities`, lowest index on ties.
    pub predicted_index: usize,
}

impl ConfidenceOutput {
    pub fn from_logits(logits: Vec<f64>) -> Self {
        let probabilities = softmax(&logits);
        let predicted_index = argmax(&probabilities);
        Self { logits, probabilities, predicted_index }
    }

    pub fn probability(&self, class: usize) -> f64 {
        self.probabilities[class]
    }

    /// Probability of the predicted class.
    pub fn confidence(&self) -> f64 {
        self.probabilities[self.predicted_index]
    }
}

pub fn softmax(logits: &[f64]) -> Vec<f64> {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = logits.iter().map(|&z| (z - max).exp()).collect();
    let total: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / total).collect()
}

fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate() {
        if v > values[best] {
            best = i;
        }
    }
    best
}

/// The only interface explainers are allowed to use.
///
/// Implementations must be deterministic: the same image always yields the
/// same output.
pub trait BlackBoxModel: Sync {
    fn predict(&self, image: &Image) -> Result<ConfidenceOutput>;

    fn n_outputs(&self) -> usize;

    /// Whether `ConfidenceOutput::logits` carries real pre-softmax values.
    fn exposes_logits(&self) -> bool {
        true
    }
}

impl<M: BlackBoxModel + ?Sized> BlackBoxModel for &M {
    fn predict(&self, image: &Image) -> Result<ConfidenceOutput> {
        (**self).predict(image)
    }

    fn n_outputs(&self) -> usize {
        (**self).n_outputs()
    }

    fn exposes_logits(&self) -> bool {
        (**self).exposes_logits()
    }
}

/// Hides the logits of the wrapped model, leaving only probabilities.
#[derive(Debug, Clone)]
pub struct ProbabilitiesOnly<M>(pub M);

impl<M: BlackBoxModel> BlackBoxModel for ProbabilitiesOnly<M> {
    fn predict(&self, image: &Image) -> Result<ConfidenceOutput> {
        self.0.predict(image)
    }

    fn n_outputs(&self) -> usize {
        self.0.n_outputs()
    }

    fn exposes_logits(&self) -> bool {
        false
    }
}

/// 2-D valid convolution. Weights are `[out][in][ky][kx]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Conv2d {
    pub out_channels: usize,
    pub in_channels: usize,
    pub kernel_h: usize,
    pub kernel_w: usize,
    pub stride: usize,
    pub weights: Vec<f32>,
    pub biases: Vec<f32>,
}

impl Conv2d {
    pub fn zeros(out_channels: usize, in_channels: usize, kernel_h: usize, kernel_w: usize, stride: usize) -> Self {
        Self {
            out_channels,
            in_channels,
            kernel_h,
            kernel_w,
            stride,
            weights: vec![0.0; out_channels * in_channels * kernel_h * kernel_w],
            biases: vec![0.0; out_channels],
        }
    }

    fn patch_len(&self) -> usize {
        self.in_channels * self.kernel_h * self.kernel_w
    }

    #[inline]
    pub fn weight_index(&self, oc: usize, ic: usize, ky: usize, kx: usize) -> usize {
        ((oc * self.in_channels + ic) * self.kernel_h + ky) * self.kernel_w + kx
    }
}

/// Fully connected layer. Weights are `[out][in]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Dense {
    pub out_dim: usize,
    pub in_dim: usize,
    pub weights: Vec<f32>,
    pub biases: Vec<f32>,
}

impl Dense {
    pub fn zeros(out_dim: usize, in_dim: usize) -> Self {
        Self { out_dim, in_dim, weights: vec![0.0; out_dim * in_dim], biases: vec![0.0; out_dim] }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Layer {
    Conv2d(Conv2d),
    Dense(Dense),
    Relu,
    Flatten,
    Softmax,
}

impl Layer {
    pub fn is_parameterized(&self) -> bool {
        matches!(self, Layer::Conv2d(_) | Layer::Dense(_))
    }

    /// `(weights, biases)` of a parameterized layer.
    pub fn params_mut(&mut self) -> Option<(&mut Vec<f32>, &mut Vec<f32>)> {
        match self {
            Layer::Conv2d(c) => Some((&mut c.weights, &mut c.biases)),
            Layer::Dense(d) => Some((&mut d.weights, &mut d.biases)),
            _ => None,
        }
    }

    /// Glorot fan sizes of a parameterized layer.
    pub fn fans(&self) -> Option<(usize, usize)> {
        match self {
            Layer::Conv2d(c) => {
                let k = c.kernel_h * c.kernel_w;
                Some((c.in_channels * k, c.out_channels * k))
            }
            Layer::Dense(d) => Some((d.in_dim, d.out_dim)),
            _ => None,
        }
    }
}

/// Activation shape between layers.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Shape {
    Spatial { height: usize, width: usize, channels: usize },
    Flat(usize),
}

impl std::fmt::Display for Shape {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Shape::Spatial { height, width, channels } => write!(f, "{height}x{width}x{channels}"),
            Shape::Flat(n) => write!(f, "[{n}]"),
        }
    }
}

/// A validated layer stack ending in exactly one softmax.
#[derive(Debug, Clone, PartialEq)]
pub struct LayeredModel {
    input_shape: (usize, usize, usize),
    layers: Vec<Layer>,
    n_outputs: usize,
}

impl LayeredModel {
    pub fn new(input_shape: (usize, usize, usize), layers: Vec<Layer>) -> Result<Self> {
        let (h, w, c) = input_shape;
        if h == 0 || w == 0 || c == 0 {
            return Err(Error::InvalidDimension(format!("input shape {h}x{w}x{c}")));
        }
        let mut shape = Shape::Spatial { height: h, width: w, channels: c };
        let n = layers.len();
        for (i, layer) in layers.iter().enumerate() {
            shape = next_shape(i, layer, shape)?;
            if matches!(layer, Layer::Softmax) && i + 1 != n {
                return Err(Error::arg(format!("softmax at layer {i} is not terminal")));
            }
        }
        if !matches!(layers.last(), Some(Layer::Softmax)) {
            return Err(Error::arg("model must end in a softmax layer"));
        }
        if !layers.iter().any(Layer::is_parameterized) {
            return Err(Error::arg("model has no parameterized layer"));
        }
        let Shape::Flat(n_outputs) = shape else {
            return Err(Error::arg(format!("softmax over non-flat shape {shape}")));
        };
        Ok(Self { input_shape, layers, n_outputs })
    }

    pub fn input_shape(&self) -> (usize, usize, usize) {
        self.input_shape
    }

    pub fn layers(&self) -> &[Layer] {
        &self.layers
    }

    /// Indices into `layers()` of Conv2d/Dense layers, output layer first.
    pub fn parameterized_layers(&self) -> Vec<usize> {
        self.layers
            .iter()
            .enumerate()
            .rev()
            .filter(|(_, l)| l.is_parameterized())
            .map(|(i, _)| i)
            .collect()
    }

    /// Rebuilds the model after in-place parameter edits. Only parameter
    /// values may change; shapes are re-validated.
    pub fn map_layers(&self, f: impl FnOnce(&mut [Layer])) -> Result<Self> {
        let mut layers = self.layers.clone();
        f(&mut layers);
        Self::new(self.input_shape, layers)
    }

    pub fn forward(&self, image: &Image) -> Result<ConfidenceOutput> {
        if image.shape() != self.input_shape {
            let (h, w, c) = self.input_shape;
            let (ih, iw, ic) = image.shape();
            return Err(Error::ShapeMismatch {
                expected: format!("{h}x{w}x{c}"),
                actual: format!("{ih}x{iw}x{ic}"),
            });
        }
        let (h, w, c) = self.input_shape;
        let mut spatial: Vec<f32> = image.data().to_vec();
        let mut flat: Vec<f64> = Vec::new();
        let mut shape = Shape::Spatial { height: h, width: w, channels: c };
        for layer in &self.layers {
            match (layer, shape) {
                (Layer::Conv2d(conv), Shape::Spatial { height, width, .. }) => {
                    let (out, oh, ow) = conv_forward(conv, &spatial, height, width);
                    spatial = out;
                    shape = Shape::Spatial { height: oh, width: ow, channels: conv.out_channels };
                }
                (Layer::Flatten, Shape::Spatial { height, width, channels }) => {
                    flat = spatial.iter().map(|&v| v as f64).collect();
                    spatial = Vec::new();
                    shape = Shape::Flat(height * width * channels);
                }
                (Layer::Dense(dense), Shape::Flat(_)) => {
                    flat = dense_forward(dense, &flat);
                    shape = Shape::Flat(dense.out_dim);
                }
                (Layer::Relu, Shape::Spatial { .. }) => spatial.iter_mut().for_each(|v| *v = v.max(0.0)),
                (Layer::Relu, Shape::Flat(_)) => flat.iter_mut().for_each(|v| *v = v.max(0.0)),
                (Layer::Softmax, Shape::Flat(_)) => break,
                _ => unreachable!("layer shapes validated at construction"),
            }
        }
        Ok(ConfidenceOutput::from_logits(flat))
    }
}

impl BlackBoxModel for LayeredModel {
    fn predict(&self, image: &Image) -> Result<ConfidenceOutput> {
        self.forward(image)
    }

    fn n_outputs(&self) -> usize {
        self.n_outputs
    }
}

fn next_shape(index: usize, layer: &Layer, shape: Shape) -> Result<Shape> {
    let bad = |msg: String| Err(Error::arg(format!("layer {index}: {msg}")));
    match (layer, shape) {
        (Layer::Conv2d(conv), Shape::Spatial { height, width, channels }) => {
            if conv.in_channels != channels {
                return bad(format!("conv expects {} input channels, got {channels}", conv.in_channels));
            }
            if conv.stride == 0 || conv.kernel_h == 0 || conv.kernel_w == 0 || conv.out_channels == 0 {
                return bad("conv has a zero kernel, stride or channel count".into());
            }
            if conv.kernel_h > height || conv.kernel_w > width {
                return bad(format!("kernel {}x{} exceeds input {height}x{width}", conv.kernel_h, conv.kernel_w));
            }
            if conv.weights.len() != conv.out_channels * conv.patch_len() || conv.biases.len() != conv.out_channels {
                return bad("conv parameter count does not match its shape".into());
            }
            Ok(Shape::Spatial {
                height: (height - conv.kernel_h) / conv.stride + 1,
                width: (width - conv.kernel_w) / conv.stride + 1,
                channels: conv.out_channels,
            })
        }
        (Layer::Dense(d), Shape::Flat(n)) => {
            if d.in_dim != n {
                return bad(format!("dense expects {} inputs, got {n}", d.in_dim));
            }
            if d.out_dim == 0 || d.weights.len() != d.out_dim * d.in_dim || d.biases.len() != d.out_dim {
                return bad("dense parameter count does not match its shape".into());
            }
            Ok(Shape::Flat(d.out_dim))
        }
        (Layer::Flatten, Shape::Spatial { height, width, channels }) => Ok(Shape::Flat(height * width * channels)),
        (Layer::Relu, s) => Ok(s),
        (Layer::Softmax, s @ Shape::Flat(_)) => Ok(s),
        (l, s) => bad(format!("{} cannot follow shape {s}", layer_name(l))),
    }
}

pub(crate) fn layer_name(layer: &Layer) -> &'static str {
    match layer {
        Layer::Conv2d(_) => "conv2d",
        Layer::Dense(_) => "dense",
        Layer::Relu => "relu",
        Layer::Flatten => "flatten",
        Layer::Softmax => "softmax",
    }
}

#[inline]
fn dot_f32(a: &[f32], b: &[f32]) -> f32 {
    let mut acc = [0.0f32; 8];
    let ca = a.chunks_exact(8);
    let cb = b.chunks_exact(8);
    let (ra, rb) = (ca.remainder(), cb.remainder());
    for (x, y) in ca.zip(cb) {
        for k in 0..8 {
            acc[k] += x[k] * y[k];
        }
    }
    let mut total: f32 = acc.iter().sum();
    for (x, y) in ra.iter().zip(rb) {
        total += x * y;
    }
    total
}

fn conv_forward(conv: &Conv2d, input: &[f32], h: usize, w: usize) -> (Vec<f32>, usize, usize) {
    let ic_n = conv.in_channels;
    let oh = (h - conv.kernel_h) / conv.stride + 1;
    let ow = (w - conv.kernel_w) / conv.stride + 1;
    let plen = conv.patch_len();
    let mut patch = vec![0.0f32; plen];
    let mut out = vec![0.0f32; oh * ow * conv.out_channels];
    for oy in 0..oh {
        for ox in 0..ow {
            let (y0, x0) = (oy * conv.stride, ox * conv.stride);
            // gather in [ic][ky][kx] order to match the weight layout
            let mut p = 0;
            for ic in 0..ic_n {
                for ky in 0..conv.kernel_h {
                    let row = ((y0 + ky) * w + x0) * ic_n + ic;
                    for kx in 0..conv.kernel_w {
                        patch[p] = input[row + kx * ic_n];
                        p += 1;
                    }
                }
            }
            let base = (oy * ow + ox) * conv.out_channels;
            for (oc, wrow) in conv.weights.chunks_exact(plen).enumerate() {
                out[base + oc] = conv.biases[oc] + dot_f32(wrow, &patch);
            }
        }
    }
    (out, oh, ow)
}

fn dense_forward(dense: &Dense, input: &[f64]) -> Vec<f64> {
    dense
        .weights
        .chunks_exact(dense.in_dim)
        .zip(&dense.biases)
        .map(|(row, &b)| {
            let mut acc = [0.0f64; 4];
            let cr = row.chunks_exact(4);
            let ci = input.chunks_exact(4);
            let (rr, ri) = (cr.remainder(), ci.remainder());
            for (wv, xv) in cr.zip(ci) {
                for k in 0..4 {
                    acc[k] += wv[k] as f64 * xv[k];
                }
            }
            let mut total = acc.iter().sum::<f64>();
            for (wv, xv) in rr.iter().zip(ri) {
                total += *wv as f64 * xv;
            }
            total + b as f64
        })
        .collect()
}
