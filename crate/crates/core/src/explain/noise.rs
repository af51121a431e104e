use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::interp::bilinear_upsample;
use crate::model::BlackBoxModel;
use crate::perturb::{composite_disc, gaussian_blur, occlude_circle, BLACK};
use crate::tensor::{Image, SaliencyMap};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum NoiseMode {
    /// Gaussian-blurred disc.
    #[default]
    Blur,
    /// Black disc.
    Black,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct NoiseParams {
    /// Disc radius in pixels.
    pub radius: usize,
    /// Spacing of probe centres on both axes.
    pub probe_stride: usize,
    pub mode: NoiseMode,
    /// Blur standard deviation; `None` uses the radius.
    pub sigma: Option<f64>,
}

impl Default for NoiseParams {
    fn default() -> Self {
        Self { radius: 5, probe_stride: 5, mode: NoiseMode::Blur, sigma: None }
    }
}

impl NoiseParams {
    pub fn sigma(&self) -> f64 {
        self.sigma.unwrap_or(self.radius as f64)
    }
}

fn half_squared_distance(a: &[f64], b: &[f64]) -> f64 {
    0.5 * a.iter().zip(b).map(|(u, v)| (u - v) * (u - v)).sum::<f64>()
}

/// `S = 1/2 ||pi(I) - pi(I')||^2` on a grid of probe centres, bilinearly
/// upsampled to the image size.
pub fn noise_sensitivity(model: &dyn BlackBoxModel, image: &Image, params: &NoiseParams) -> Result<SaliencyMap> {
    if !model.exposes_logits() {
        return Err(Error::Contract("noise sensitivity needs a model that exposes logits".into()));
    }
    if params.radius == 0 || params.probe_stride == 0 {
        return Err(Error::arg(format!(
            "radius {} and probe stride {} must be >= 1",
            params.radius, params.probe_stride
        )));
    }
    let (h, w, _) = image.shape();
    let blurred = match params.mode {
        NoiseMode::Blur => Some(gaussian_blur(image, params.sigma())?),
        NoiseMode::Black => None,
    };
    let reference = model.predict(image)?.logits;
    let (gh, gw) = (h.div_ceil(params.probe_stride), w.div_ceil(params.probe_stride));
    let mut coarse = Vec::with_capacity(gh * gw);
    for cy in (0..h).step_by(params.probe_stride) {
        for cx in (0..w).step_by(params.probe_stride) {
            let perturbed = match &blurred {
                Some(b) => composite_disc(image, b, cy, cx, params.radius)?,
                None => occlude_circle(image, cy, cx, params.radius, BLACK)?,
            };
            let logits = model.predict(&perturbed)?.logits;
            if logits.len() != reference.len() {
                return Err(Error::Contract("model changed its output length".into()));
            }
            coarse.push(half_squared_distance(&reference, &logits));
        }
    }
    bilinear_upsample(&SaliencyMap::new(gh, gw, coarse)?, h, w)
}
