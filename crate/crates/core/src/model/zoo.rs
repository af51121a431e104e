//! Oracle models with analytically known behaviour.

use super::randomize::{fill_uniform, glorot_limit};
use super::{BlackBoxModel, ConfidenceOutput, Conv2d, Dense, Layer, LayeredModel};
use crate::error::{Error, Result};
use crate::rng::RngStream;
use crate::tensor::{Image, Rect};

/// Stacked greyscale frames of the Atari agents.
pub const DQN_INPUT_SHAPE: (usize, usize, usize) = (84, 84, 4);

/// Logit margin of class 0 over the best other class on the reference input
/// of the planted models.
const PLANTED_MARGIN: f64 = 5.0;
/// Intensity used inside the region of the calibration input.
const PLANTED_REFERENCE_LEVEL: f32 = 0.9;
/// Region intensity at which class 0 stops winning.
const PLANTED_SWITCH_LEVEL: f32 = 0.8;
/// Activation of the planted hidden unit of the DQN-shaped model on the
/// reference input, about ten times its largest random neighbour.
const PLANTED_FEATURE_LEVEL: f64 = 40.0;

fn glorot_conv(out_c: usize, in_c: usize, k: usize, stride: usize, rng: &mut RngStream) -> Conv2d {
    let mut conv = Conv2d::zeros(out_c, in_c, k, k, stride);
    fill_uniform(&mut conv.weights, glorot_limit(in_c * k * k, out_c * k * k), rng);
    conv
}

fn glorot_dense(out: usize, inp: usize, rng: &mut RngStream) -> Dense {
    let mut dense = Dense::zeros(out, inp);
    fill_uniform(&mut dense.weights, glorot_limit(inp, out), rng);
    dense
}

/// DQN-shaped network on 84x84x4 input with Glorot-uniform weights and zero
/// biases. Weights are drawn input layer first, each in storage order.
pub fn build_dqn_toy(n_actions: usize, rng: &mut RngStream) -> Result<LayeredModel> {
    if n_actions < 2 {
        return Err(Error::arg(format!("n_actions must be >= 2, got {n_actions}")));
    }
    let layers = vec![
        Layer::Conv2d(glorot_conv(32, 4, 8, 4, rng)),
        Layer::Relu,
        Layer::Conv2d(glorot_conv(64, 32, 4, 2, rng)),
        Layer::Relu,
        Layer::Conv2d(glorot_conv(64, 64, 3, 1, rng)),
        Layer::Relu,
        Layer::Flatten,
        Layer::Dense(glorot_dense(512, 7 * 7 * 64, rng)),
        Layer::Relu,
        Layer::Dense(glorot_dense(n_actions, 512, rng)),
        Layer::Softmax,
    ];
    LayeredModel::new(DQN_INPUT_SHAPE, layers)
}

/// Input-independent model with fixed output probabilities.
#[derive(Debug, Clone, PartialEq)]
pub struct ConstantModel {
    output: ConfidenceOutput,
}

impl ConstantModel {
    pub fn output(&self) -> &ConfidenceOutput {
        &self.output
    }
}

impl BlackBoxModel for ConstantModel {
    fn predict(&self, _image: &Image) -> Result<ConfidenceOutput> {
        Ok(self.output.clone())
    }

    fn n_outputs(&self) -> usize {
        self.output.probabilities.len()
    }
}

/// Logits are `ln(p)`; the reported probabilities are `p` itself so that
/// `f(I)` equals the largest entry exactly.
pub fn build_constant_model(probabilities: &[f64]) -> Result<ConstantModel> {
    if probabilities.is_empty() || probabilities.iter().any(|&p| !(p > 0.0 && p.is_finite())) {
        return Err(Error::arg("probabilities must be positive and finite"));
    }
    let total: f64 = probabilities.iter().sum();
    if (total - 1.0).abs() > 1e-9 {
        return Err(Error::arg(format!("probabilities sum to {total}, not 1")));
    }
    let logits = probabilities.iter().map(|p| p.ln()).collect();
    let mut predicted_index = 0;
    for (i, &p) in probabilities.iter().enumerate() {
        if p > probabilities[predicted_index] {
            predicted_index = i;
        }
    }
    Ok(ConstantModel {
        output: ConfidenceOutput { logits, probabilities: probabilities.to_vec(), predicted_index },
    })
}

/// Compact planted-region model:
/// `Flatten -> Dense(8) -> ReLU -> Dense(n_outputs) -> Softmax`.
///
/// First-layer weights of every pixel outside `region` are zero. Hidden unit 0
/// has strictly positive weights inside the region and is the only input of
/// the class-0 logit, so that logit is strictly increasing in every region
/// pixel. Class 0 is calibrated to win by a logit margin of 5 when the region
/// is filled with 0.9 and to tie the best other class at 0.8, a sharp switch
/// that keeps the output sensitive to partial occlusion of the region.
pub fn build_planted_model(
    region: Rect,
    input_shape: (usize, usize, usize),
    n_outputs: usize,
    rng: &mut RngStream,
) -> Result<LayeredModel> {
    const HIDDEN: usize = 8;
    let (h, w, c) = input_shape;
    if !region.fits_within(h, w) {
        return Err(Error::arg(format!("region {region:?} outside {h}x{w}")));
    }
    if n_outputs < 2 {
        return Err(Error::arg("planted model needs at least 2 outputs"));
    }
    let n_in = h * w * c;
    let limit = glorot_limit(n_in, HIDDEN);
    let mut first = Dense::zeros(HIDDEN, n_in);
    for unit in 0..HIDDEN {
        for y in region.top..region.bottom() {
            for x in region.left..region.right() {
                for ch in 0..c {
                    let weight = if unit == 0 {
                        limit * (1.0 - rng.next_f64())
                    } else {
                        rng.uniform(-limit, limit)
                    };
                    first.weights[unit * n_in + (y * w + x) * c + ch] = weight as f32;
                }
            }
        }
    }
    let mut last = glorot_dense(n_outputs, HIDDEN, rng);
    last.weights[..HIDDEN].fill(0.0);
    last.weights[0] = 1.0;
    let model = LayeredModel::new(
        input_shape,
        vec![Layer::Flatten, Layer::Dense(first), Layer::Relu, Layer::Dense(last), Layer::Softmax],
    )?;
    calibrate_class_zero(model, region, 3)
}

/// Sets the class-0 weight and bias of the output layer (at `layers()[layer]`,
/// fed by a single unit) so that class 0 wins by `PLANTED_MARGIN` when the
/// region is filled with `PLANTED_REFERENCE_LEVEL` and ties the best other
/// class at `PLANTED_SWITCH_LEVEL`.
fn calibrate_class_zero(model: LayeredModel, region: Rect, layer: usize) -> Result<LayeredModel> {
    let (h, w, c) = model.input_shape();
    let probe = |level: f32| -> Result<(f64, f64)> {
        let image = Image::from_fn(h, w, c, |y, x, _| if region.contains(y, x) { level } else { 0.0 })?;
        let logits = model.forward(&image)?.logits;
        let best_other = logits[1..].iter().copied().fold(f64::NEG_INFINITY, f64::max);
        Ok((logits[0], best_other))
    };
    let (path_hi, other_hi) = probe(PLANTED_REFERENCE_LEVEL)?;
    let (path_lo, other_lo) = probe(PLANTED_SWITCH_LEVEL)?;
    if path_hi <= path_lo {
        return Err(Error::arg("planted path is inactive on the reference input"));
    }
    let scale = (other_hi + PLANTED_MARGIN - other_lo) / (path_hi - path_lo);
    if !(scale > 0.0) {
        return Err(Error::arg("cannot calibrate planted path against the other classes"));
    }
    let bias = other_lo - scale * path_lo;
    model.map_layers(|layers| {
        if let Layer::Dense(d) = &mut layers[layer] {
            let unit = d.weights[..d.in_dim].iter().position(|&v| v != 0.0).expect("path unit");
            d.weights[unit] = scale as f32;
            d.biases[0] = bias as f32;
        }
    })
}

/// Receptive field of one cell of the last DQN conv layer.
const DQN_FIELD: usize = 36;
const DQN_FIELD_STRIDE: usize = 8;
const DQN_CELLS: usize = 7;

fn dqn_kept_cells(region: Rect) -> Vec<(usize, usize)> {
    let mut kept = Vec::new();
    for i in 0..DQN_CELLS {
        for j in 0..DQN_CELLS {
            let field = Rect::new(i * DQN_FIELD_STRIDE, j * DQN_FIELD_STRIDE, DQN_FIELD, DQN_FIELD);
            if field.top >= region.top
                && field.bottom() <= region.bottom()
                && field.left >= region.left
                && field.right() <= region.right()
            {
                kept.push((i, j));
            }
        }
    }
    kept
}

/// Pixels the planted DQN actually depends on: the union of the receptive
/// fields of the last-conv cells that lie entirely inside `region`. `None`
/// when no cell fits (the region must be at least 36x36).
pub fn planted_dqn_support(region: Rect) -> Option<Rect> {
    let kept = dqn_kept_cells(region);
    let (i0, j0) = *kept.first()?;
    let (i1, j1) = *kept.last()?;
    Some(Rect::new(
        i0 * DQN_FIELD_STRIDE,
        j0 * DQN_FIELD_STRIDE,
        (i1 - i0) * DQN_FIELD_STRIDE + DQN_FIELD,
        (j1 - j0) * DQN_FIELD_STRIDE + DQN_FIELD,
    ))
}

/// DQN-shaped planted model.
///
/// Conv weights are shared across positions, so the region is enforced at the
/// first dense layer: columns fed by last-conv cells whose receptive field is
/// not inside `region` are zeroed. Channel 0 of every conv layer and hidden
/// unit 0 form a non-negative path that alone drives the class-0 logit.
/// That unit is scaled to dominate the hidden layer, as a learned feature
/// would, so a re-drawn output layer still reads it.
/// The dependence set is [`planted_dqn_support`]`(region)`.
pub fn build_planted_dqn(region: Rect, n_actions: usize, rng: &mut RngStream) -> Result<LayeredModel> {
    let (h, w, _) = DQN_INPUT_SHAPE;
    if !region.fits_within(h, w) {
        return Err(Error::arg(format!("region {region:?} outside {h}x{w}")));
    }
    let kept = dqn_kept_cells(region);
    if kept.is_empty() {
        return Err(Error::arg(format!(
            "region {region:?} contains no {DQN_FIELD}x{DQN_FIELD} receptive field on the {DQN_FIELD_STRIDE}-pixel grid"
        )));
    }
    let base = build_dqn_toy(n_actions, rng)?;
    let planted = base.map_layers(|layers| {
        for idx in [0, 2, 4] {
            if let Layer::Conv2d(conv) = &mut layers[idx] {
                plant_conv_path(conv, idx == 0);
            }
        }
        if let Layer::Dense(hidden) = &mut layers[7] {
            let channels = 64;
            let mut keep = vec![false; DQN_CELLS * DQN_CELLS];
            for &(i, j) in &kept {
                keep[i * DQN_CELLS + j] = true;
            }
            for unit in 0..hidden.out_dim {
                let row = &mut hidden.weights[unit * hidden.in_dim..(unit + 1) * hidden.in_dim];
                for (cell, block) in row.chunks_exact_mut(channels).enumerate() {
                    if !keep[cell] {
                        block.fill(0.0);
                    } else if unit == 0 {
                        block[0] = positive(block[0]);
                        block[1..].fill(0.0);
                    }
                }
            }
        }
        if let Layer::Dense(out) = &mut layers[9] {
            out.weights[..out.in_dim].fill(0.0);
            out.weights[0] = 1.0;
            out.biases[0] = 0.0;
        }
    })?;
    // the class-0 logit now equals hidden unit 0
    let reference = Image::from_fn(h, w, DQN_INPUT_SHAPE.2, |y, x, _| {
        if region.contains(y, x) { PLANTED_REFERENCE_LEVEL } else { 0.0 }
    })?;
    let feature = planted.forward(&reference)?.logits[0];
    if !(feature > 0.0) {
        return Err(Error::arg("planted path is inactive on the reference input"));
    }
    let gain = (PLANTED_FEATURE_LEVEL / feature) as f32;
    let amplified = planted.map_layers(|layers| {
        if let Layer::Dense(hidden) = &mut layers[7] {
            hidden.weights[..hidden.in_dim].iter_mut().for_each(|v| *v *= gain);
            hidden.biases[0] *= gain;
        }
    })?;
    calibrate_class_zero(amplified, region, 9)
}

fn positive(w: f32) -> f32 {
    w.abs().max(1e-4)
}

/// Makes output channel 0 a non-negative function of input channel 0 only
/// (all input channels for the first layer).
fn plant_conv_path(conv: &mut Conv2d, first: bool) {
    for ic in 0..conv.in_channels {
        for ky in 0..conv.kernel_h {
            for kx in 0..conv.kernel_w {
                let i = conv.weight_index(0, ic, ky, kx);
                conv.weights[i] = if first || ic == 0 { positive(conv.weights[i]) } else { 0.0 };
            }
        }
    }
}

/// Static maze: black corridor bands every `period` pixels, grey (0.5) wall
/// blocks in between.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct MazeLayout {
    pub height: usize,
    pub width: usize,
    pub period: usize,
    pub corridor: usize,
}

impl Default for MazeLayout {
    fn default() -> Self {
        Self { height: 84, width: 84, period: 14, corridor: 5 }
    }
}

impl MazeLayout {
    pub const WALL: f32 = 0.5;

    pub fn is_wall(&self, y: usize, x: usize) -> bool {
        y % self.period >= self.corridor && x % self.period >= self.corridor
    }

    pub fn wall_count(&self) -> usize {
        (0..self.height)
            .flat_map(|y| (0..self.width).map(move |x| (y, x)))
            .filter(|&(y, x)| self.is_wall(y, x))
            .count()
    }

    pub fn validate(&self) -> Result<()> {
        if self.height == 0 || self.width == 0 || self.corridor == 0 || self.corridor >= self.period {
            return Err(Error::arg(format!("invalid maze layout {self:?}")));
        }
        if self.wall_count() == 0 {
            return Err(Error::arg("maze layout has no walls"));
        }
        Ok(())
    }
}

/// Model that reads deviations from grey: a 1x1 conv splits every channel
/// into `relu(x - 0.5)` ("bright") and `relu(0.5 - x)` ("dark"), so 0.5-valued
/// pixels produce no features at all.
///
/// Class 0 rewards dark evidence in corridors and penalizes dark evidence on
/// walls, so the frame matching the layout scores logit +4 while an all-black
/// frame scores -4. Bright objects add evidence. Other classes carry small
/// random weights.
pub fn build_maze_model(
    layout: MazeLayout,
    channels: usize,
    n_outputs: usize,
    rng: &mut RngStream,
) -> Result<LayeredModel> {
    layout.validate()?;
    if n_outputs < 2 || channels == 0 {
        return Err(Error::arg("maze model needs >= 2 outputs and >= 1 channel"));
    }
    let (h, w, c) = (layout.height, layout.width, channels);
    let mut split = Conv2d::zeros(2 * c, c, 1, 1, 1);
    for ch in 0..c {
        let (bright, dark) = (split.weight_index(2 * ch, ch, 0, 0), split.weight_index(2 * ch + 1, ch, 0, 0));
        split.weights[bright] = 1.0;
        split.biases[2 * ch] = -0.5;
        split.weights[dark] = -1.0;
        split.biases[2 * ch + 1] = 0.5;
    }
    let walls = layout.wall_count() as f64;
    let corridors = (h * w) as f64 - walls;
    let corridor_weight = 8.0 / corridors / c as f64;
    let wall_weight = -16.0 / walls / c as f64;
    let bright_weight = 2.0 * corridor_weight;
    let noise = 0.5 * corridor_weight;

    let n_in = h * w * 2 * c;
    let mut head = Dense::zeros(n_outputs, n_in);
    for y in 0..h {
        for x in 0..w {
            let dark = if layout.is_wall(y, x) { wall_weight } else { corridor_weight };
            for ch in 0..c {
                let base = (y * w + x) * 2 * c + 2 * ch;
                head.weights[base] = bright_weight as f32;
                head.weights[base + 1] = dark as f32;
            }
        }
    }
    for v in &mut head.weights[n_in..] {
        *v = rng.uniform(-noise, noise) as f32;
    }
    LayeredModel::new(
        (h, w, c),
        vec![Layer::Conv2d(split), Layer::Relu, Layer::Flatten, Layer::Dense(head), Layer::Softmax],
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    fn region_image(shape: (usize, usize, usize), region: Rect, inside: f32, outside: f32) -> Image {
        Image::from_fn(shape.0, shape.1, shape.2, |y, x, _| if region.contains(y, x) { inside } else { outside })
            .unwrap()
    }

    #[test]
    fn dqn_toy_shape_and_determinism() {
        let a = build_dqn_toy(5, &mut RngStream::new(42)).unwrap();
        let b = build_dqn_toy(5, &mut RngStream::new(42)).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.parameterized_layers().len(), 5);
        let mut rng = RngStream::new(1);
        let img = Image::from_fn(84, 84, 4, |_, _, _| rng.next_f64() as f32).unwrap();
        let out = a.forward(&img).unwrap();
        assert_eq!(out.probabilities.len(), 5);
        assert!((out.probabilities.iter().sum::<f64>() - 1.0).abs() < 1e-6);
        assert!(build_dqn_toy(1, &mut RngStream::new(1)).is_err());
    }

    #[test]
    fn constant_model_contract() {
        let m = build_constant_model(&[0.7, 0.3]).unwrap();
        let out = m.predict(&Image::zeros(3, 3, 1).unwrap()).unwrap();
        assert_eq!(out.confidence(), 0.7);
        let p = crate::model::softmax(&out.logits);
        assert!((p[0] - 0.7).abs() < 1e-9 && (p[1] - 0.3).abs() < 1e-9);
        assert!(build_constant_model(&[0.5, 0.6]).is_err());
        assert!(build_constant_model(&[1.0, 0.0]).is_err());
    }

    #[test]
    fn planted_ignores_outside_and_is_monotone() {
        let shape = (12, 12, 2);
        let region = Rect::new(3, 4, 5, 4);
        let m = build_planted_model(region, shape, 3, &mut RngStream::new(8)).unwrap();
        let mut rng = RngStream::new(2);
        let a = Image::from_fn(12, 12, 2, |_, _, _| rng.next_f64() as f32).unwrap();
        let b = Image::from_fn(12, 12, 2, |y, x, c| if region.contains(y, x) { a.get(y, x, c) } else { rng.next_f64() as f32 })
            .unwrap();
        assert_eq!(m.forward(&a).unwrap(), m.forward(&b).unwrap());
        let ones = m.forward(&region_image(shape, region, 1.0, 0.0)).unwrap();
        let zeros = m.forward(&region_image(shape, region, 0.0, 0.0)).unwrap();
        assert!(ones.logits[0] > zeros.logits[0]);
        assert!(matches!(
            build_planted_model(Rect::new(10, 10, 5, 5), shape, 3, &mut RngStream::new(1)),
            Err(Error::Argument(_))
        ));
    }

    #[test]
    fn planted_black_box_perturbation_check() {
        let shape = (16, 16, 3);
        let region = Rect::new(4, 5, 6, 6);
        let m = build_planted_model(region, shape, 4, &mut RngStream::new(21)).unwrap();
        let mut rng = RngStream::new(22);
        let base = Image::from_fn(16, 16, 3, |_, _, _| rng.next_f64() as f32).unwrap();
        let reference = m.forward(&base).unwrap();
        let mut changed_inside = 0;
        for trial in 0..400 {
            let inside = trial % 2 == 1;
            let (y, x) = loop {
                let y = rng.below(16) as usize;
                let x = rng.below(16) as usize;
                if region.contains(y, x) == inside {
                    break (y, x);
                }
            };
            let mut data = base.data().to_vec();
            let ch = rng.below(3) as usize;
            data[(y * 16 + x) * 3 + ch] = rng.next_f64() as f32;
            let out = m.forward(&Image::new(16, 16, 3, data).unwrap()).unwrap();
            if inside {
                changed_inside += usize::from(out != reference);
            } else {
                assert_eq!(out, reference);
            }
        }
        assert!(changed_inside >= 190, "{changed_inside} / 200");
    }

    #[test]
    fn planted_dqn_depends_only_on_support() {
        let region = Rect::new(16, 24, 44, 44);
        assert_eq!(planted_dqn_support(region), Some(region));
        assert_eq!(planted_dqn_support(Rect::new(0, 0, 30, 30)), None);
        let m = build_planted_dqn(region, 4, &mut RngStream::new(3)).unwrap();
        assert_eq!(m.parameterized_layers().len(), 5);
        let mut rng = RngStream::new(4);
        let a = Image::from_fn(84, 84, 4, |_, _, _| rng.next_f64() as f32).unwrap();
        let b = Image::from_fn(84, 84, 4, |y, x, c| if region.contains(y, x) { a.get(y, x, c) } else { 0.0 }).unwrap();
        assert_eq!(m.forward(&a).unwrap(), m.forward(&b).unwrap());
        let ones = m.forward(&region_image(DQN_INPUT_SHAPE, region, 1.0, 0.0)).unwrap();
        let zeros = m.forward(&region_image(DQN_INPUT_SHAPE, region, 0.0, 0.0)).unwrap();
        assert!(ones.logits[0] > zeros.logits[0]);
        let reference = m.forward(&region_image(DQN_INPUT_SHAPE, region, 0.9, 0.0)).unwrap();
        assert_eq!(reference.predicted_index, 0);
    }

    #[test]
    fn maze_model_reads_deviation_from_grey() {
        let layout = MazeLayout::default();
        let m = build_maze_model(layout, 4, 4, &mut RngStream::new(1)).unwrap();
        let frame = Image::from_fn(84, 84, 4, |y, x, _| if layout.is_wall(y, x) { 0.5 } else { 0.0 }).unwrap();
        let out = m.forward(&frame).unwrap();
        assert_eq!(out.predicted_index, 0);
        assert!((out.logits[0] - 4.0).abs() < 1e-3, "{}", out.logits[0]);
        let black = m.forward(&Image::zeros(84, 84, 4).unwrap()).unwrap();
        assert!((black.logits[0] + 4.0).abs() < 1e-3, "{}", black.logits[0]);
        let grey = m.forward(&Image::filled(84, 84, 4, 0.5).unwrap()).unwrap();
        assert!(grey.logits.iter().all(|&z| z.abs() < 1e-6));
        assert!(layout.wall_count() as f64 / (84.0 * 84.0) >= 0.3);
    }
}
