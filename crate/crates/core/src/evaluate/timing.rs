use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::explain::{explain, ExplainerConfig};
use crate::model::BlackBoxModel;
use crate::tensor::Image;

/// Wall-clock seconds per saliency map.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimingStats {
    pub mean: f64,
    /// Sample standard deviation (0 for a single run).
    pub std: f64,
    pub min: f64,
    pub max: f64,
    pub runs: Vec<f64>,
}

impl TimingStats {
    pub fn from_runs(runs: Vec<f64>) -> Result<Self> {
        if runs.is_empty() {
            return Err(Error::arg("no timing runs"));
        }
        let n = runs.len() as f64;
        let mean = runs.iter().sum::<f64>() / n;
        let std = if runs.len() > 1 {
            (runs.iter().map(|r| (r - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
        } else {
            0.0
        };
        let min = runs.iter().copied().fold(f64::INFINITY, f64::min);
        let max = runs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        Ok(Self { mean, std, min, max, runs })
    }
}

/// Runs `warmup` untimed explanations of the first image, then times one
/// explanation per image on the calling thread.
pub fn time_explainer(
    model: &dyn BlackBoxModel,
    images: &[Image],
    config: &ExplainerConfig,
    warmup: usize,
) -> Result<TimingStats> {
    let first = images.first().ok_or_else(|| Error::arg("timing needs at least one image"))?;
    for _ in 0..warmup {
        explain(model, first, config)?;
    }
    let mut runs = Vec::with_capacity(images.len());
    for image in images {
        let start = Instant::now();
        explain(model, image, config)?;
        runs.push(start.elapsed().as_secs_f64());
    }
    TimingStats::from_runs(runs)
}
