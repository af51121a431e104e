use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::{check_class, class_probability, Target};
use crate::error::{Error, Result};
use crate::model::BlackBoxModel;
use crate::perturb::{delete_superpixels, quickshift_segment, QuickshiftParams, Segmentation};
use crate::rng::RngStream;
use crate::tensor::{Image, SaliencyMap};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LimeParams {
    pub segmentation: QuickshiftParams,
    /// Perturbed samples, including the unperturbed image as sample 0.
    pub n_samples: usize,
    /// Width of the exponential kernel on cosine distance.
    pub kernel_width: f64,
    /// Ridge penalty on the superpixel coefficients (not the intercept).
    pub ridge_lambda: f64,
    pub seed: u64,
    pub target: Target,
    /// Superpixels marked by [`lime_binarize`].
    pub top_k: usize,
}

impl Default for LimeParams {
    fn default() -> Self {
        Self {
            segmentation: QuickshiftParams::default(),
            n_samples: 1000,
            kernel_width: 0.25,
            ridge_lambda: 1.0,
            seed: 0,
            target: Target::Argmax,
            top_k: 5,
        }
    }
}

/// Fitted linear surrogate over superpixel on/off indicators.
#[derive(Debug, Clone, PartialEq)]
pub struct LimeExplanation {
    pub segmentation: Segmentation,
    /// One coefficient per superpixel label.
    pub weights: Vec<f64>,
    pub intercept: f64,
    /// Each pixel carries the weight of its superpixel.
    pub saliency: SaliencyMap,
}

/// Segments with quickshift (child stream 0 of `seed`) and samples with
/// child stream 1.
pub fn lime(model: &dyn BlackBoxModel, image: &Image, params: &LimeParams) -> Result<LimeExplanation> {
    let root = RngStream::new(params.seed);
    let seg = quickshift_segment(image, &params.segmentation, &mut root.child(0))?;
    lime_with_segmentation(model, image, seg, params, &mut root.child(1))
}

/// LIME on a fixed segmentation. Sample 0 keeps every superpixel; every other
/// sample switches each superpixel on with probability 1/2, drawn in label
/// order.
pub fn lime_with_segmentation(
    model: &dyn BlackBoxModel,
    image: &Image,
    seg: Segmentation,
    params: &LimeParams,
    rng: &mut RngStream,
) -> Result<LimeExplanation> {
    let d = seg.n_segments();
    if params.n_samples < d + 1 {
        return Err(Error::arg(format!(
            "{} samples cannot fit {d} superpixels; need at least {}",
            params.n_samples,
            d + 1
        )));
    }
    if !(params.kernel_width > 0.0) || !(params.ridge_lambda >= 0.0) {
        return Err(Error::arg("kernel width must be positive and ridge lambda non-negative"));
    }
    let mut class = match params.target {
        Target::Class(c) => Some(check_class(model, c)?),
        Target::Argmax => None,
    };
    let n = params.n_samples;
    let mut z = DMatrix::<f64>::zeros(n, d);
    let mut y = DVector::<f64>::zeros(n);
    let mut weight = DVector::<f64>::zeros(n);
    let mut off = Vec::with_capacity(d);
    for i in 0..n {
        off.clear();
        for j in 0..d {
            let on = i == 0 || rng.bernoulli(0.5);
            z[(i, j)] = if on { 1.0 } else { 0.0 };
            if !on {
                off.push(j);
            }
        }
        let output = model.predict(&delete_superpixels(image, &seg, &off)?)?;
        let target = *class.get_or_insert(output.predicted_index);
        y[i] = class_probability(&output, target)?;
        weight[i] = kernel_weight(d - off.len(), d, params.kernel_width);
    }
    let (weights, intercept) = weighted_ridge(&z, &y, &weight, params.ridge_lambda)?;
    let saliency = SaliencyMap::from_fn(seg.height(), seg.width(), |yy, xx| weights[seg.label(yy, xx)])?;
    Ok(LimeExplanation { segmentation: seg, weights, intercept, saliency })
}

/// `exp(-d^2 / w^2)` with `d` the cosine distance between a sample with
/// `active` of `total` superpixels on and the all-on vector.
fn kernel_weight(active: usize, total: usize, width: f64) -> f64 {
    let distance = if active == 0 { 1.0 } else { 1.0 - (active as f64 / total as f64).sqrt() };
    (-(distance * distance) / (width * width)).exp()
}

/// Minimizes `sum_i w_i (y_i - b - z_i . beta)^2 + lambda |beta|^2` in
/// closed form by centering on the weighted means.
fn weighted_ridge(z: &DMatrix<f64>, y: &DVector<f64>, w: &DVector<f64>, lambda: f64) -> Result<(Vec<f64>, f64)> {
    let total = w.sum();
    if !(total > 0.0) {
        return Err(Error::Singular("all sample weights vanished; increase kernel width".into()));
    }
    let z_mean = z.tr_mul(w) / total;
    let y_mean = y.dot(w) / total;
    let mut zc = z.clone();
    for (i, mut row) in zc.row_iter_mut().enumerate() {
        let s = w[i].sqrt();
        for (v, m) in row.iter_mut().zip(z_mean.iter()) {
            *v = (*v - m) * s;
        }
    }
    let yc = DVector::from_iterator(y.len(), y.iter().zip(w.iter()).map(|(&v, &wi)| (v - y_mean) * wi.sqrt()));
    let mut gram = zc.tr_mul(&zc);
    for j in 0..gram.nrows() {
        gram[(j, j)] += lambda;
    }
    let rhs = zc.tr_mul(&yc);
    let chol = gram.cholesky().ok_or_else(|| {
        Error::Singular("weighted design matrix is singular; draw more samples or raise ridge_lambda".into())
    })?;
    let beta = chol.solve(&rhs);
    let intercept = y_mean - beta.dot(&z_mean);
    Ok((beta.iter().copied().collect(), intercept))
}

/// Ones on the `top_k` superpixels with the largest weights (ties go to the
/// lower label), zeros elsewhere.
pub fn lime_binarize(expl: &LimeExplanation, top_k: usize) -> Result<SaliencyMap> {
    let n = expl.weights.len();
    if top_k == 0 || top_k > n {
        return Err(Error::arg(format!("top_k {top_k} must lie in 1..={n}")));
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| expl.weights[b].total_cmp(&expl.weights[a]).then(a.cmp(&b)));
    let mut selected = vec![false; n];
    for &l in &order[..top_k] {
        selected[l] = true;
    }
    let seg = &expl.segmentation;
    SaliencyMap::from_fn(seg.height(), seg.width(), |y, x| if selected[seg.label(y, x)] { 1.0 } else { 0.0 })
}
