//! Run configuration: one JSON document per run.
//!
//! Loading resolves every unset seed from the global seed, so the config
//! echoed into a report reproduces the run on its own.

use std::fs;
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use saliency_core::evaluate::SanityOptions;
use saliency_core::explain::ExplainerConfig;
use saliency_core::model::BiasPolicy;
use saliency_core::rng::derive_seed;
use saliency_core::Rect;

use crate::error::{BenchError, Result};
use crate::frames::FrameSpec;

/// Region of the compact planted model and of planted-rect frames.
pub const DEFAULT_REGION: Rect = Rect {
    top: 22,
    left: 22,
    height: 40,
    width: 40,
};
/// Region of the DQN-shaped planted model (must hold a 36x36 receptive field).
pub const DEFAULT_DQN_REGION: Rect = Rect {
    top: 20,
    left: 20,
    height: 44,
    width: 44,
};

// Indices of the seeds derived from the global seed.
const SEED_MODEL: u64 = 1;
const SEED_IMAGES: u64 = 2;
const SEED_INSERTION: u64 = 3;
const SEED_SANITY: u64 = 4;
const SEED_EXPLAINER_BASE: u64 = 100;

fn four() -> usize {
    4
}

fn default_region() -> Rect {
    DEFAULT_REGION
}

fn default_dqn_region() -> Rect {
    DEFAULT_DQN_REGION
}

fn dqn_shape() -> [usize; 3] {
    [84, 84, 4]
}

fn size84() -> usize {
    84
}

fn period() -> usize {
    14
}

fn corridor() -> usize {
    5
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum ModelSource {
    /// SBM1 model file.
    File { path: PathBuf },
    /// Randomly initialized DQN-shaped network.
    Dqn {
        #[serde(default = "four")]
        n_actions: usize,
        #[serde(default)]
        seed: Option<u64>,
    },
    /// Compact planted-region model.
    Planted {
        #[serde(default = "default_region")]
        region: Rect,
        #[serde(default = "dqn_shape")]
        input_shape: [usize; 3],
        #[serde(default = "four")]
        n_outputs: usize,
        #[serde(default)]
        seed: Option<u64>,
    },
    /// DQN-shaped planted-region model.
    PlantedDqn {
        #[serde(default = "default_dqn_region")]
        region: Rect,
        #[serde(default = "four")]
        n_actions: usize,
        #[serde(default)]
        seed: Option<u64>,
    },
    /// Model that treats grey (0.5) as background on a fixed maze layout.
    Maze {
        #[serde(default = "size84")]
        height: usize,
        #[serde(default = "size84")]
        width: usize,
        #[serde(default = "period")]
        period: usize,
        #[serde(default = "corridor")]
        corridor: usize,
        #[serde(default = "four")]
        channels: usize,
        #[serde(default = "four")]
        n_outputs: usize,
        #[serde(default)]
        seed: Option<u64>,
    },
    /// Input-independent model.
    Constant { probabilities: Vec<f64> },
}

impl ModelSource {
    /// Short name used as a column header in report tables.
    pub fn label(&self) -> String {
        match self {
            ModelSource::File { path } => {
                format!(
                    "file:{}",
                    path.file_stem()
                        .map(|s| s.to_string_lossy().into_owned())
                        .unwrap_or_default()
                )
            }
            ModelSource::Dqn { .. } => "dqn".into(),
            ModelSource::Planted { .. } => "planted".into(),
            ModelSource::PlantedDqn { .. } => "planted-dqn".into(),
            ModelSource::Maze { .. } => "maze".into(),
            ModelSource::Constant { .. } => "constant".into(),
        }
    }

    fn seed_slot(&mut self) -> Option<&mut Option<u64>> {
        match self {
            ModelSource::Dqn { seed, .. }
            | ModelSource::Planted { seed, .. }
            | ModelSource::PlantedDqn { seed, .. }
            | ModelSource::Maze { seed, .. } => Some(seed),
            ModelSource::File { .. } | ModelSource::Constant { .. } => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum ImageSource {
    /// SBT1 image tensors.
    Files { paths: Vec<PathBuf> },
    /// Synthetic frames.
    Frames(FrameSpec),
}

/// Similarity metrics reported by the sanity command.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Metric {
    Spearman,
    Ssim,
    HogPearson,
}

impl Metric {
    pub const ALL: [Metric; 3] = [Metric::Spearman, Metric::Ssim, Metric::HogPearson];

    pub fn name(self) -> &'static str {
        match self {
            Metric::Spearman => "spearman",
            Metric::Ssim => "ssim",
            Metric::HogPearson => "hog_pearson",
        }
    }
}

fn all_metrics() -> Vec<Metric> {
    Metric::ALL.to_vec()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct InsertionOptions {
    /// Pixels restored per curve step.
    pub step_pixels: usize,
    /// Seed of the within-superpixel shuffle used for LIME rankings.
    pub seed: Option<u64>,
}

impl Default for InsertionOptions {
    fn default() -> Self {
        Self {
            step_pixels: 84,
            seed: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(default, deny_unknown_fields)]
pub struct SanitySettings {
    /// Compare `|S|` instead of the raw maps.
    pub absolute: bool,
    pub bias: BiasPolicy,
    /// Fresh explainer seed at every randomization depth `k >= 1`.
    pub reseed_per_depth: bool,
    /// Seed of the cascading randomization.
    pub seed: Option<u64>,
    /// Use only the first `max_images` images.
    pub max_images: Option<usize>,
}

impl SanitySettings {
    pub fn options(&self) -> SanityOptions {
        SanityOptions {
            absolute: self.absolute,
            bias: self.bias,
            reseed_per_depth: self.reseed_per_depth,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BenchOptions {
    /// Discarded runs before timing.
    pub warmup: usize,
}

impl Default for BenchOptions {
    fn default() -> Self {
        Self { warmup: 1 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(default, deny_unknown_fields)]
pub struct RenderOptions {
    /// Blend the heatmap over the greyscale input with this opacity.
    pub alpha: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub seed: u64,
    pub model: ModelSource,
    pub images: ImageSource,
    pub explainers: Vec<ExplainerConfig>,
    pub metrics: Vec<Metric>,
    pub insertion: InsertionOptions,
    pub sanity: SanitySettings,
    pub bench: BenchOptions,
    pub render: RenderOptions,
    pub out: Option<PathBuf>,
}

const TOP_LEVEL: [&str; 10] = [
    "seed",
    "model",
    "images",
    "explainers",
    "metrics",
    "insertion",
    "sanity",
    "bench",
    "render",
    "out",
];

fn section<T: DeserializeOwned>(value: Value, field: &str) -> Result<T> {
    serde_json::from_value(value).map_err(|e| BenchError::config(field, e.to_string()))
}

fn optional<T: DeserializeOwned + Default>(obj: &mut Map<String, Value>, field: &str) -> Result<T> {
    match obj.remove(field) {
        Some(v) => section(v, field),
        None => Ok(T::default()),
    }
}

impl RunConfig {
    /// Reads a config file, or the config embedded in a report written by
    /// any command.
    pub fn load(path: &Path, seed_override: Option<u64>) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| {
            BenchError::config("--config", format!("cannot read {}: {e}", path.display()))
        })?;
        let mut value: Value = serde_json::from_str(&text).map_err(|e| {
            BenchError::config("$", format!("{} is not valid JSON: {e}", path.display()))
        })?;
        if value.get("command").is_some() {
            if let Some(embedded) = value.get_mut("config") {
                value = embedded.take();
            }
        }
        Self::from_value(value, seed_override)
    }

    /// Parses and resolves a config document; see the module docs.
    pub fn from_value(value: Value, seed_override: Option<u64>) -> Result<Self> {
        let Value::Object(mut obj) = value else {
            return Err(BenchError::config("$", "config must be a JSON object"));
        };
        if let Some(unknown) = obj.keys().find(|k| !TOP_LEVEL.contains(&k.as_str())) {
            return Err(BenchError::config(unknown.clone(), "unknown field"));
        }
        let seed = match (seed_override, obj.remove("seed")) {
            (Some(s), _) => s,
            (None, Some(v)) => section(v, "seed")?,
            (None, None) => 0,
        };
        let model_value = obj
            .remove("model")
            .ok_or_else(|| BenchError::config("model", "missing field"))?;
        let mut model: ModelSource = section(model_value, "model")?;
        let images_value = obj
            .remove("images")
            .ok_or_else(|| BenchError::config("images", "missing field"))?;
        let mut images: ImageSource = section(images_value, "images")?;

        let mut explainers = Vec::new();
        if let Some(list) = obj.remove("explainers") {
            let Value::Array(items) = list else {
                return Err(BenchError::config("explainers", "expected an array"));
            };
            for (j, mut item) in items.into_iter().enumerate() {
                let field = format!("explainers[{j}]");
                let stochastic = matches!(
                    item.get("kind").and_then(Value::as_str),
                    Some("rise" | "lime" | "random")
                );
                if let Value::Object(map) = &mut item {
                    if stochastic && !map.contains_key("seed") {
                        map.insert(
                            "seed".into(),
                            derive_seed(seed, SEED_EXPLAINER_BASE + j as u64).into(),
                        );
                    }
                }
                explainers.push(section::<ExplainerConfig>(item, &field)?);
            }
        }
        let metrics = match obj.remove("metrics") {
            Some(v) => section(v, "metrics")?,
            None => all_metrics(),
        };
        let mut insertion: InsertionOptions = optional(&mut obj, "insertion")?;
        let mut sanity: SanitySettings = optional(&mut obj, "sanity")?;
        let bench: BenchOptions = optional(&mut obj, "bench")?;
        let render: RenderOptions = optional(&mut obj, "render")?;
        let out: Option<PathBuf> = optional(&mut obj, "out")?;

        if let Some(slot) = model.seed_slot() {
            slot.get_or_insert(derive_seed(seed, SEED_MODEL));
        }
        if let ImageSource::Frames(spec) = &mut images {
            spec.seed.get_or_insert(derive_seed(seed, SEED_IMAGES));
        }
        insertion
            .seed
            .get_or_insert(derive_seed(seed, SEED_INSERTION));
        sanity.seed.get_or_insert(derive_seed(seed, SEED_SANITY));

        let config = RunConfig {
            seed,
            model,
            images,
            explainers,
            metrics,
            insertion,
            sanity,
            bench,
            render,
            out,
        };
        config.validate()?;
        Ok(config)
    }

    /// Checks ranges and that every referenced path exists.
    pub fn validate(&self) -> Result<()> {
        match &self.model {
            ModelSource::File { path } if !path.is_file() => {
                return Err(BenchError::config(
                    "model.path",
                    format!("no such file: {}", path.display()),
                ));
            }
            ModelSource::Constant { probabilities } if probabilities.is_empty() => {
                return Err(BenchError::config(
                    "model.probabilities",
                    "must not be empty",
                ));
            }
            _ => {}
        }
        match &self.images {
            ImageSource::Files { paths } => {
                if paths.is_empty() {
                    return Err(BenchError::config(
                        "images.paths",
                        "at least one image required",
                    ));
                }
                for (i, p) in paths.iter().enumerate() {
                    if !p.is_file() {
                        return Err(BenchError::config(
                            format!("images.paths[{i}]"),
                            format!("no such file: {}", p.display()),
                        ));
                    }
                }
            }
            ImageSource::Frames(spec) => spec.validate()?,
        }
        if self.insertion.step_pixels == 0 {
            return Err(BenchError::config("insertion.step_pixels", "must be >= 1"));
        }
        if self.sanity.max_images == Some(0) {
            return Err(BenchError::config("sanity.max_images", "must be >= 1"));
        }
        if let Some(a) = self.render.alpha {
            if !(0.0..=1.0).contains(&a) {
                return Err(BenchError::config(
                    "render.alpha",
                    format!("{a} is outside [0, 1]"),
                ));
            }
        }
        Ok(())
    }

    pub fn require_explainers(&self) -> Result<()> {
        if self.explainers.is_empty() {
            return Err(BenchError::config(
                "explainers",
                "at least one explainer required",
            ));
        }
        Ok(())
    }

    /// Output directory: the command-line value wins over the config.
    pub fn output_dir(&self, cli: Option<&Path>) -> Result<PathBuf> {
        cli.map(Path::to_path_buf)
            .or_else(|| self.out.clone())
            .ok_or_else(|| BenchError::config("out", "no output directory given (use --out)"))
    }
}
