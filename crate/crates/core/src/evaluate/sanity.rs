use serde::{Deserialize, Serialize};

use super::similarity::{hog_pearson, spearman, ssim};
use crate::error::{Error, Result};
use crate::explain::{explain, lime_binarize, ExplainerConfig};
use crate::model::{randomize_layers_with, BiasPolicy, LayeredModel};
use crate::rng::{derive_seed, RngStream};
use crate::tensor::{Image, SaliencyMap};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct SanityOptions {
    /// Compare `|S|` instead of the raw maps.
    pub absolute: bool,
    pub bias: BiasPolicy,
    /// Explainer seeds at depth `k >= 1` become `derive_seed(seed, k)`, so
    /// randomized maps share no sampling noise with the baseline. Depth 0
    /// always reuses the configured seed.
    pub reseed_per_depth: bool,
}

/// Mean of a similarity over the images where it is defined.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricSummary {
    pub mean: Option<f64>,
    pub evaluated: usize,
    /// Images whose correlation was undefined (a constant map).
    pub excluded: usize,
}

impl MetricSummary {
    fn from_values(values: &[Option<f64>]) -> Self {
        let defined: Vec<f64> = values.iter().flatten().copied().collect();
        let mean = (!defined.is_empty()).then(|| defined.iter().sum::<f64>() / defined.len() as f64);
        Self { mean, evaluated: defined.len(), excluded: values.len() - defined.len() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SanityRow {
    /// Number of randomized parameterized layers, counted from the output.
    pub depth: usize,
    /// Index into `LayeredModel::layers()` of the deepest randomized layer.
    pub layer_index: Option<usize>,
    pub spearman: MetricSummary,
    pub ssim: MetricSummary,
    pub hog_pearson: MetricSummary,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SanityReport {
    pub explainer: String,
    /// Depth 0 (fresh recomputation on the original model) followed by
    /// depths `1..=L`.
    pub rows: Vec<SanityRow>,
}

impl SanityReport {
    /// Whether every defined similarity is 1 at every depth, the signature
    /// of an explainer that ignores the model.
    pub fn is_model_independent(&self) -> bool {
        self.rows.iter().all(|r| {
            [r.spearman, r.ssim, r.hog_pearson].iter().all(|m| m.mean.is_none_or(|v| (v - 1.0).abs() < 1e-12))
        })
    }
}

fn saliency_for(model: &LayeredModel, image: &Image, config: &ExplainerConfig, absolute: bool) -> Result<SaliencyMap> {
    let expl = explain(model, image, config)?;
    let map = match (&expl.lime, config) {
        (Some(l), ExplainerConfig::Lime(p)) => lime_binarize(l, p.top_k.min(l.weights.len()))?,
        _ => expl.saliency,
    };
    Ok(if absolute { map.abs() } else { map })
}

fn defined(result: Result<f64>) -> Result<Option<f64>> {
    match result {
        Ok(v) => Ok(Some(v)),
        Err(Error::UndefinedCorrelation) => Ok(None),
        Err(e) => Err(e),
    }
}

fn compare(baseline: &[SaliencyMap], maps: &[SaliencyMap], depth: usize, layer_index: Option<usize>) -> Result<SanityRow> {
    let (mut rho, mut s, mut hog) = (Vec::new(), Vec::new(), Vec::new());
    for (a, b) in baseline.iter().zip(maps) {
        rho.push(defined(spearman(a, b))?);
        s.push(defined(ssim(a, b))?);
        hog.push(defined(hog_pearson(a, b))?);
    }
    Ok(SanityRow {
        depth,
        layer_index,
        spearman: MetricSummary::from_values(&rho),
        ssim: MetricSummary::from_values(&s),
        hog_pearson: MetricSummary::from_values(&hog),
    })
}

/// Cascading randomization test. The randomized model at depth `k` is
/// drawn once from `rng` and shared by all images; explainer seeds stay
/// fixed across depths unless `options.reseed_per_depth` is set. LIME maps are binarized to their `top_k`
/// superpixels before comparison.
pub fn sanity_check(
    model: &LayeredModel,
    images: &[Image],
    config: &ExplainerConfig,
    rng: &RngStream,
    options: &SanityOptions,
) -> Result<SanityReport> {
    if images.is_empty() {
        return Err(Error::arg("sanity check needs at least one image"));
    }
    let maps_for = |m: &LayeredModel, config: &ExplainerConfig| -> Result<Vec<SaliencyMap>> {
        images.iter().map(|img| saliency_for(m, img, config, options.absolute)).collect()
    };
    let baseline = maps_for(model, config)?;
    let layers = model.parameterized_layers();
    let mut rows = vec![compare(&baseline, &maps_for(model, config)?, 0, None)?];
    for k in 1..=layers.len() {
        let randomized = randomize_layers_with(model, k, rng, options.bias)?;
        let depth_config = match config.seed() {
            Some(seed) if options.reseed_per_depth => config.with_seed(derive_seed(seed, k as u64)),
            _ => config.clone(),
        };
        rows.push(compare(&baseline, &maps_for(&randomized, &depth_config)?, k, Some(layers[k - 1]))?);
    }
    Ok(SanityReport { explainer: config.label(), rows })
}
