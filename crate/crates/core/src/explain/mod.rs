//! Perturbation-based saliency explainers.
//!
//! Every explainer talks to the model exclusively through [`BlackBoxModel`].
//! Maps are returned raw; normalization is left to rendering and metrics.

mod lime;
mod noise;
mod occlusion;
mod rise;

pub use lime::{lime, lime_binarize, lime_with_segmentation, LimeExplanation, LimeParams};
pub use noise::{noise_sensitivity, NoiseMode, NoiseParams};
pub use occlusion::{occlusion_anchors, occlusion_sensitivity, OcclusionParams};
pub use rise::{rise, RiseParams};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{BlackBoxModel, ConfidenceOutput};
use crate::perturb::{BLACK, GREY};
use crate::rng::RngStream;
use crate::tensor::{Image, SaliencyMap};

/// Class whose probability an explainer tracks.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Target {
    /// The class the model predicts for the unperturbed image.
    #[default]
    Argmax,
    Class(usize),
}

impl Target {
    /// Resolves the class index, querying the model once for `Argmax`.
    pub(crate) fn resolve(self, model: &dyn BlackBoxModel, image: &Image) -> Result<usize> {
        match self {
            Target::Argmax => Ok(model.predict(image)?.predicted_index),
            Target::Class(c) => check_class(model, c),
        }
    }
}

pub(crate) fn check_class(model: &dyn BlackBoxModel, class: usize) -> Result<usize> {
    if class >= model.n_outputs() {
        return Err(Error::arg(format!("target class {class} out of range 0..{}", model.n_outputs())));
    }
    Ok(class)
}

pub(crate) fn class_probability(output: &ConfidenceOutput, class: usize) -> Result<f64> {
    output.probabilities.get(class).copied().ok_or_else(|| {
        Error::Contract(format!("model returned {} probabilities, expected class {class}", output.probabilities.len()))
    })
}

/// One explainer and its parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum ExplainerConfig {
    Occlusion(OcclusionParams),
    Noise(NoiseParams),
    Rise(RiseParams),
    Lime(LimeParams),
    /// Model-independent dummy: the channel mean of the input.
    InputCopy,
    /// Model-independent baseline: uniform random values.
    Random {
        #[serde(default)]
        seed: u64,
    },
}

impl ExplainerConfig {
    pub fn occlusion_black() -> Self {
        Self::Occlusion(OcclusionParams { color: BLACK, ..OcclusionParams::default() })
    }

    pub fn occlusion_grey() -> Self {
        Self::Occlusion(OcclusionParams { color: GREY, ..OcclusionParams::default() })
    }

    pub fn noise_blur() -> Self {
        Self::Noise(NoiseParams::default())
    }

    pub fn noise_black() -> Self {
        Self::Noise(NoiseParams { mode: NoiseMode::Black, ..NoiseParams::default() })
    }

    /// Short display name, e.g. `OS-black` or `NS-blur`.
    pub fn label(&self) -> String {
        match self {
            Self::Occlusion(p) if p.color == BLACK => "OS-black".into(),
            Self::Occlusion(p) if p.color == GREY => "OS-grey".into(),
            Self::Occlusion(p) => format!("OS-{}", p.color),
            Self::Noise(p) => match p.mode {
                NoiseMode::Blur => "NS-blur".into(),
                NoiseMode::Black => "NS-black".into(),
            },
            Self::Rise(_) => "RISE".into(),
            Self::Lime(_) => "LIME".into(),
            Self::InputCopy => "input-copy".into(),
            Self::Random { .. } => "random".into(),
        }
    }

    /// Whether the map is computed from model queries at all.
    pub fn uses_model(&self) -> bool {
        !matches!(self, Self::InputCopy | Self::Random { .. })
    }

    /// Seed of the explainer's own random stream, if it has one.
    pub fn seed(&self) -> Option<u64> {
        match self {
            Self::Rise(p) => Some(p.seed),
            Self::Lime(p) => Some(p.seed),
            Self::Random { seed } => Some(*seed),
            _ => None,
        }
    }

    /// Copy with the random stream re-seeded to `seed`; deterministic
    /// explainers are returned unchanged.
    pub fn with_seed(&self, seed: u64) -> Self {
        let mut out = self.clone();
        match &mut out {
            Self::Rise(p) => p.seed = seed,
            Self::Lime(p) => p.seed = seed,
            Self::Random { seed: s } => *s = seed,
            _ => {}
        }
        out
    }
}

/// Saliency map plus the LIME surrogate when one was fitted.
#[derive(Debug, Clone, PartialEq)]
pub struct Explanation {
    pub saliency: SaliencyMap,
    pub lime: Option<LimeExplanation>,
}

pub fn explain(model: &dyn BlackBoxModel, image: &Image, config: &ExplainerConfig) -> Result<Explanation> {
    let saliency = match config {
        ExplainerConfig::Occlusion(p) => occlusion_sensitivity(model, image, p)?,
        ExplainerConfig::Noise(p) => noise_sensitivity(model, image, p)?,
        ExplainerConfig::Rise(p) => rise(model, image, p)?,
        ExplainerConfig::Lime(p) => {
            let expl = lime(model, image, p)?;
            return Ok(Explanation { saliency: expl.saliency.clone(), lime: Some(expl) });
        }
        ExplainerConfig::InputCopy => image.channel_mean(),
        ExplainerConfig::Random { seed } => {
            let mut rng = RngStream::new(*seed);
            SaliencyMap::from_fn(image.height(), image.width(), |_, _| rng.next_f64())?
        }
    };
    Ok(Explanation { saliency, lime: None })
}
