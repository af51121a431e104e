use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::explain::{class_probability, LimeExplanation};
use crate::model::BlackBoxModel;
use crate::rng::RngStream;
use crate::tensor::{Image, SaliencyMap};

/// Confidence in the original prediction as pixels are restored.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InsertionCurve {
    /// Restored fraction of pixels, from 0 (all occluded) to 1 (original).
    pub fractions: Vec<f64>,
    pub confidences: Vec<f64>,
    /// Class predicted on the original image.
    pub class: usize,
}

impl InsertionCurve {
    pub fn new(fractions: Vec<f64>, confidences: Vec<f64>, class: usize) -> Result<Self> {
        if fractions.len() != confidences.len() || fractions.len() < 2 {
            return Err(Error::arg("insertion curve needs matching fraction/confidence vectors of length >= 2"));
        }
        if fractions[0] != 0.0 || *fractions.last().unwrap() != 1.0 || fractions.windows(2).any(|p| p[1] <= p[0]) {
            return Err(Error::arg("fractions must increase strictly from 0 to 1"));
        }
        Ok(Self { fractions, confidences, class })
    }

    pub fn auc(&self) -> f64 {
        auc(self)
    }
}

/// Trapezoidal area under the curve over the fraction axis.
pub fn auc(curve: &InsertionCurve) -> f64 {
    curve
        .fractions
        .windows(2)
        .zip(curve.confidences.windows(2))
        .map(|(f, c)| (f[1] - f[0]) * (c[0] + c[1]) / 2.0)
        .sum()
}

/// Pixel indices (row-major) by descending saliency; ties keep row-major
/// order.
pub fn rank_by_saliency(saliency: &SaliencyMap) -> Vec<usize> {
    let values = saliency.values();
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[b].total_cmp(&values[a]));
    order
}

/// Superpixels by descending weight (ties to the lower label), with the
/// pixel order inside each superpixel shuffled.
pub fn rank_by_lime(expl: &LimeExplanation, rng: &mut RngStream) -> Vec<usize> {
    let mut labels: Vec<usize> = (0..expl.weights.len()).collect();
    labels.sort_by(|&a, &b| expl.weights[b].total_cmp(&expl.weights[a]).then(a.cmp(&b)));
    let mut members = expl.segmentation.members();
    let mut order = Vec::with_capacity(expl.segmentation.height() * expl.segmentation.width());
    for l in labels {
        let pixels = &mut members[l];
        rng.shuffle(pixels);
        order.extend_from_slice(pixels);
    }
    order
}

/// Insertion curve for a pixel ranking: start from the all-zero image and
/// restore `step_pixels` pixels per step. `order` must be a permutation of
/// the pixel indices.
pub fn insertion_curve_for_order(
    model: &dyn BlackBoxModel,
    image: &Image,
    order: &[usize],
    step_pixels: usize,
) -> Result<InsertionCurve> {
    let (h, w, c) = image.shape();
    let total = h * w;
    if order.len() != total {
        return Err(Error::arg(format!("ranking has {} entries for {total} pixels", order.len())));
    }
    let mut seen = vec![false; total];
    for &p in order {
        if p >= total || std::mem::replace(&mut seen[p], true) {
            return Err(Error::arg("ranking is not a permutation of the pixels"));
        }
    }
    if step_pixels == 0 {
        return Err(Error::arg("step_pixels must be >= 1"));
    }
    let original = model.predict(image)?;
    let class = original.predicted_index;
    let steps = total.div_ceil(step_pixels);
    let mut canvas = Image::zeros(h, w, c)?;
    let mut fractions = Vec::with_capacity(steps + 1);
    let mut confidences = Vec::with_capacity(steps + 1);
    for k in 0..=steps {
        let restored = (k * step_pixels).min(total);
        if k > 0 {
            for &p in &order[((k - 1) * step_pixels)..restored] {
                canvas.data_mut()[p * c..(p + 1) * c].copy_from_slice(&image.data()[p * c..(p + 1) * c]);
            }
        }
        let output = if k == steps { original.clone() } else { model.predict(&canvas)? };
        let confidence = class_probability(&output, class)?;
        fractions.push(restored as f64 / total as f64);
        confidences.push(confidence);
    }
    InsertionCurve::new(fractions, confidences, class)
}

/// Insertion curve for a saliency map ranked by [`rank_by_saliency`].
pub fn insertion_curve(
    model: &dyn BlackBoxModel,
    image: &Image,
    saliency: &SaliencyMap,
    step_pixels: usize,
) -> Result<InsertionCurve> {
    if saliency.dims() != (image.height(), image.width()) {
        return Err(Error::arg(format!(
            "saliency {:?} does not match image {}x{}",
            saliency.dims(),
            image.height(),
            image.width()
        )));
    }
    insertion_curve_for_order(model, image, &rank_by_saliency(saliency), step_pixels)
}
