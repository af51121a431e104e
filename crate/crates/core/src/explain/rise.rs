use serde::{Deserialize, Serialize};

use super::{class_probability, Target};
use crate::error::{Error, Result};
use crate::model::BlackBoxModel;
use crate::perturb::{Mask, RiseMaskSampler};
use crate::rng::RngStream;
use crate::tensor::{Image, SaliencyMap};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RiseParams {
    /// Number of masks.
    pub n: usize,
    /// Side length of the Bernoulli grid.
    pub grid: usize,
    /// Probability that a grid cell is kept.
    pub p: f64,
    pub seed: u64,
    /// Random sub-cell shift of each upsampled mask.
    pub shift: bool,
    pub target: Target,
}

impl Default for RiseParams {
    fn default() -> Self {
        Self { n: 2000, grid: 8, p: 0.9, seed: 0, shift: true, target: Target::Argmax }
    }
}

pub(crate) fn apply_mask(image: &Image, mask: &Mask) -> Image {
    let mut out = image.clone();
    let c = image.channels();
    for (px, &m) in out.data_mut().chunks_exact_mut(c).zip(mask.values()) {
        px.iter_mut().for_each(|v| *v *= m as f32);
    }
    out
}

/// `S = 1/(p n) * sum_i f(I * M_i) M_i`, masks streamed from `params.seed`.
pub fn rise(model: &dyn BlackBoxModel, image: &Image, params: &RiseParams) -> Result<SaliencyMap> {
    let (h, w, _) = image.shape();
    let sampler = RiseMaskSampler::new(params.grid, params.p, h, w, params.shift)?;
    if params.n == 0 {
        return Err(Error::arg("number of masks must be >= 1"));
    }
    let class = params.target.resolve(model, image)?;
    let mut rng = RngStream::new(params.seed);
    let mut acc = vec![0.0; h * w];
    for _ in 0..params.n {
        let mask = sampler.sample(&mut rng);
        let score = class_probability(&model.predict(&apply_mask(image, &mask))?, class)?;
        for (a, &m) in acc.iter_mut().zip(mask.values()) {
            *a += score * m;
        }
    }
    let norm = 1.0 / (params.p * params.n as f64);
    SaliencyMap::new(h, w, acc.into_iter().map(|a| a * norm).collect())
}
