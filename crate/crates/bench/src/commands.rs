//! The five subcommands. Each validates its config, writes its artifacts
//! into the output directory and finishes with a `<command>.json` report.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use saliency_core::evaluate::{
    insertion_curve, insertion_curve_for_order, rank_by_lime, sanity_check, time_explainer,
    MetricSummary, SanityReport, HOG_BINS, HOG_CELL, SSIM_K1, SSIM_K2, SSIM_SIGMA, SSIM_WINDOW,
};
use saliency_core::explain::explain;
use saliency_core::io::{encode_tensor, read_tensor, write_saliency, write_tensor};
use saliency_core::model::{
    build_constant_model, build_dqn_toy, build_maze_model, build_planted_dqn, build_planted_model,
    read_model, BlackBoxModel, ConstantModel, LayeredModel, MazeLayout,
};
use saliency_core::{Image, RngStream};

use crate::config::{ImageSource, Metric, ModelSource, RunConfig};
use crate::error::{BenchError, Result};
use crate::frames;
use crate::render::{frame_rgb, heatmap_rgb, write_png};
use crate::report::{create_dir, csv_writer, write_report};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Explain,
    Insertion,
    Sanity,
    Bench,
    Frames,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Explain => "explain",
            Command::Insertion => "insertion",
            Command::Sanity => "sanity",
            Command::Bench => "bench",
            Command::Frames => "frames",
        }
    }
}

/// Loads the config (or a report embedding one) and runs `command`.
pub fn run(
    command: Command,
    config_path: &Path,
    out: Option<&Path>,
    seed: Option<u64>,
) -> Result<PathBuf> {
    let config = RunConfig::load(config_path, seed)?;
    let dir = config.output_dir(out)?;
    match command {
        Command::Explain => cmd_explain(&config, &dir).map(drop)?,
        Command::Insertion => cmd_insertion(&config, &dir).map(drop)?,
        Command::Sanity => cmd_sanity(&config, &dir).map(drop)?,
        Command::Bench => cmd_bench(&config, &dir).map(drop)?,
        Command::Frames => cmd_frames(&config, &dir).map(drop)?,
    }
    Ok(dir)
}

pub enum LoadedModel {
    Layered(LayeredModel),
    Constant(ConstantModel),
}

impl LoadedModel {
    pub fn black_box(&self) -> &dyn BlackBoxModel {
        match self {
            LoadedModel::Layered(m) => m,
            LoadedModel::Constant(m) => m,
        }
    }

    pub fn layered(&self) -> Result<&LayeredModel> {
        match self {
            LoadedModel::Layered(m) => Ok(m),
            LoadedModel::Constant(_) => Err(BenchError::config(
                "model.kind",
                "parameter randomization needs a layered model",
            )),
        }
    }

    fn input_shape(&self) -> Option<(usize, usize, usize)> {
        match self {
            LoadedModel::Layered(m) => Some(m.input_shape()),
            LoadedModel::Constant(_) => None,
        }
    }
}

pub fn load_model(source: &ModelSource) -> Result<LoadedModel> {
    let rng = |seed: &Option<u64>| RngStream::new(seed.unwrap_or(0));
    let model = match source {
        ModelSource::File { path } => read_model(path)
            .map_err(|e| BenchError::config("model.path", format!("{}: {e}", path.display())))?,
        ModelSource::Dqn { n_actions, seed } => build_dqn_toy(*n_actions, &mut rng(seed))?,
        ModelSource::Planted {
            region,
            input_shape: [h, w, c],
            n_outputs,
            seed,
        } => build_planted_model(*region, (*h, *w, *c), *n_outputs, &mut rng(seed))?,
        ModelSource::PlantedDqn {
            region,
            n_actions,
            seed,
        } => build_planted_dqn(*region, *n_actions, &mut rng(seed))?,
        ModelSource::Maze {
            height,
            width,
            period,
            corridor,
            channels,
            n_outputs,
            seed,
        } => {
            let layout = MazeLayout {
                height: *height,
                width: *width,
                period: *period,
                corridor: *corridor,
            };
            build_maze_model(layout, *channels, *n_outputs, &mut rng(seed))?
        }
        ModelSource::Constant { probabilities } => {
            return Ok(LoadedModel::Constant(build_constant_model(probabilities)?))
        }
    };
    Ok(LoadedModel::Layered(model))
}

pub fn load_images(source: &ImageSource) -> Result<Vec<Image>> {
    match source {
        ImageSource::Files { paths } => paths
            .iter()
            .enumerate()
            .map(|(i, p)| {
                read_tensor(p).map_err(|e| {
                    BenchError::config(
                        format!("images.paths[{i}]"),
                        format!("{}: {e}", p.display()),
                    )
                })
            })
            .collect(),
        ImageSource::Frames(spec) => frames::generate(spec),
    }
}

/// Model and images of a run, with image shapes checked against the model.
pub fn load_inputs(config: &RunConfig) -> Result<(LoadedModel, Vec<Image>)> {
    let model = load_model(&config.model)?;
    let images = load_images(&config.images)?;
    if let Some(shape) = model.input_shape() {
        if let Some((i, img)) = images
            .iter()
            .enumerate()
            .find(|(_, img)| img.shape() != shape)
        {
            return Err(BenchError::config(
                "images",
                format!(
                    "image {i} has shape {:?} but the model expects {shape:?}",
                    img.shape()
                ),
            ));
        }
    }
    Ok((model, images))
}

fn file_stem(image: usize, explainer: usize, label: &str) -> String {
    let label: String = label
        .chars()
        .map(|c| {
            if c.is_ascii_alphanumeric() || c == '-' {
                c
            } else {
                '_'
            }
        })
        .collect();
    format!("img{image:03}_e{explainer:02}_{label}")
}

fn relative(dir: &Path, path: &Path) -> String {
    path.strip_prefix(dir)
        .unwrap_or(path)
        .to_string_lossy()
        .into_owned()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LimeRecord {
    pub segmentation: String,
    pub n_segments: usize,
    pub weights: Vec<f64>,
    pub intercept: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SaliencyRecord {
    pub image: usize,
    pub explainer: usize,
    pub label: String,
    pub saliency: String,
    pub heatmap: String,
    pub min: f64,
    pub max: f64,
    pub lime: Option<LimeRecord>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExplainResult {
    pub model: String,
    pub outputs: Vec<SaliencyRecord>,
}

/// One SBT1 saliency tensor and one PNG heatmap per (image, explainer).
pub fn cmd_explain(config: &RunConfig, dir: &Path) -> Result<ExplainResult> {
    config.require_explainers()?;
    let (model, images) = load_inputs(config)?;
    let sal_dir = dir.join("saliency");
    create_dir(&sal_dir)?;
    let mut outputs = Vec::new();
    for (i, image) in images.iter().enumerate() {
        for (j, explainer) in config.explainers.iter().enumerate() {
            let label = explainer.label();
            let stem = file_stem(i, j, &label);
            let expl = explain(model.black_box(), image, explainer)?;
            let sbt = sal_dir.join(format!("{stem}.sbt"));
            write_saliency(&expl.saliency, &sbt)?;
            let png = sal_dir.join(format!("{stem}.png"));
            let rgb = heatmap_rgb(&expl.saliency, config.render.alpha.map(|a| (image, a)));
            write_png(&png, image.width(), image.height(), &rgb)?;
            let lime = match &expl.lime {
                Some(l) => {
                    let seg_dir = dir.join("segments");
                    create_dir(&seg_dir)?;
                    let seg = &l.segmentation;
                    let labels: Vec<f32> = seg.labels().iter().map(|&v| v as f32).collect();
                    let path = seg_dir.join(format!("{stem}.sbt"));
                    let bytes = encode_tensor(seg.height(), seg.width(), 1, &labels)?;
                    std::fs::write(&path, bytes).map_err(|e| BenchError::io(&path, e))?;
                    Some(LimeRecord {
                        segmentation: relative(dir, &path),
                        n_segments: seg.n_segments(),
                        weights: l.weights.clone(),
                        intercept: l.intercept,
                    })
                }
                None => None,
            };
            outputs.push(SaliencyRecord {
                image: i,
                explainer: j,
                label,
                saliency: relative(dir, &sbt),
                heatmap: relative(dir, &png),
                min: expl.saliency.min(),
                max: expl.saliency.max(),
                lime,
            });
        }
    }
    let result = ExplainResult {
        model: config.model.label(),
        outputs,
    };
    write_report(dir, Command::Explain.name(), config, &result)?;
    Ok(result)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AucRow {
    pub explainer: usize,
    pub label: String,
    pub mean_auc: f64,
    /// Sample standard deviation over images (0 for one image).
    pub std_auc: f64,
    pub aucs: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InsertionResult {
    pub model: String,
    pub step_pixels: usize,
    pub n_steps: usize,
    pub rows: Vec<AucRow>,
}

fn mean_std(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = if values.len() > 1 {
        values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)
    } else {
        0.0
    };
    (mean, var.sqrt())
}

/// Insertion curves of every (explainer, image) pair and per-explainer
/// mean AUC. LIME rankings order whole superpixels by weight.
pub fn cmd_insertion(config: &RunConfig, dir: &Path) -> Result<InsertionResult> {
    config.require_explainers()?;
    let (model, images) = load_inputs(config)?;
    create_dir(dir)?;
    let step = config.insertion.step_pixels;
    let root = RngStream::new(config.insertion.seed.unwrap_or(0));
    let mut curves = csv_writer(&dir.join("insertion_curves.csv"))?;
    curves.write_record([
        "explainer_index",
        "explainer",
        "image",
        "step",
        "fraction",
        "confidence",
    ])?;
    let mut rows = Vec::new();
    let mut n_steps = 0;
    for (j, explainer) in config.explainers.iter().enumerate() {
        let label = explainer.label();
        let mut aucs = Vec::with_capacity(images.len());
        for (i, image) in images.iter().enumerate() {
            let expl = explain(model.black_box(), image, explainer)?;
            let curve = match &expl.lime {
                Some(l) => {
                    let order = rank_by_lime(l, &mut root.child(j as u64).child(i as u64));
                    insertion_curve_for_order(model.black_box(), image, &order, step)?
                }
                None => insertion_curve(model.black_box(), image, &expl.saliency, step)?,
            };
            n_steps = curve.fractions.len() - 1;
            for (k, (f, c)) in curve.fractions.iter().zip(&curve.confidences).enumerate() {
                curves.serialize((j, &label, i, k, f, c))?;
            }
            aucs.push(curve.auc());
        }
        let (mean_auc, std_auc) = mean_std(&aucs);
        rows.push(AucRow {
            explainer: j,
            label,
            mean_auc,
            std_auc,
            aucs,
        });
    }
    curves
        .flush()
        .map_err(|e| BenchError::io(&dir.join("insertion_curves.csv"), e))?;
    let model_label = config.model.label();
    let mut table = csv_writer(&dir.join("insertion_table.csv"))?;
    table.write_record(["explainer", model_label.as_str()])?;
    for row in &rows {
        table.serialize((&row.label, row.mean_auc))?;
    }
    table
        .flush()
        .map_err(|e| BenchError::io(&dir.join("insertion_table.csv"), e))?;
    let result = InsertionResult {
        model: model_label,
        step_pixels: step,
        n_steps,
        rows,
    };
    write_report(dir, Command::Insertion.name(), config, &result)?;
    Ok(result)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimilarityParameters {
    pub ssim_window: usize,
    pub ssim_sigma: f64,
    pub ssim_k1: f64,
    pub ssim_k2: f64,
    pub hog_bins: usize,
    pub hog_cell: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SanityResult {
    pub model: String,
    pub images: usize,
    pub metrics: Vec<Metric>,
    pub parameters: SimilarityParameters,
    pub reports: Vec<SanityReport>,
    /// Explainers whose maps never change under randomization.
    pub warnings: Vec<String>,
}

fn metric_of(row: &saliency_core::evaluate::SanityRow, metric: Metric) -> MetricSummary {
    match metric {
        Metric::Spearman => row.spearman,
        Metric::Ssim => row.ssim,
        Metric::HogPearson => row.hog_pearson,
    }
}

/// Cascading randomization for every explainer; one CSV row per
/// (explainer, depth) with the selected metrics as columns.
pub fn cmd_sanity(config: &RunConfig, dir: &Path) -> Result<SanityResult> {
    config.require_explainers()?;
    let (model, mut images) = load_inputs(config)?;
    let layered = model.layered()?;
    if let Some(n) = config.sanity.max_images {
        images.truncate(n);
    }
    create_dir(dir)?;
    let rng = RngStream::new(config.sanity.seed.unwrap_or(0));
    let options = config.sanity.options();
    let mut reports = Vec::new();
    let mut warnings = Vec::new();
    for explainer in &config.explainers {
        let report = sanity_check(layered, &images, explainer, &rng, &options)?;
        if report.is_model_independent() {
            let warning = format!(
                "explainer {} fails the sanity check: its maps are identical at every randomization depth",
                report.explainer
            );
            eprintln!("warning: {warning}");
            warnings.push(warning);
        }
        reports.push(report);
    }
    let path = dir.join("sanity.csv");
    let mut csv = csv_writer(&path)?;
    let mut header = vec![
        "explainer_index".to_string(),
        "explainer".into(),
        "depth".into(),
        "layer_index".into(),
    ];
    for m in &config.metrics {
        for suffix in ["mean", "evaluated", "excluded"] {
            header.push(format!("{}_{suffix}", m.name()));
        }
    }
    csv.write_record(&header)?;
    for (j, report) in reports.iter().enumerate() {
        for row in &report.rows {
            let mut record = vec![
                j.to_string(),
                report.explainer.clone(),
                row.depth.to_string(),
                row.layer_index.map(|l| l.to_string()).unwrap_or_default(),
            ];
            for &m in &config.metrics {
                let s = metric_of(row, m);
                record.push(s.mean.map(|v| v.to_string()).unwrap_or_default());
                record.push(s.evaluated.to_string());
                record.push(s.excluded.to_string());
            }
            csv.write_record(&record)?;
        }
    }
    csv.flush().map_err(|e| BenchError::io(&path, e))?;
    let result = SanityResult {
        model: config.model.label(),
        images: images.len(),
        metrics: config.metrics.clone(),
        parameters: SimilarityParameters {
            ssim_window: SSIM_WINDOW,
            ssim_sigma: SSIM_SIGMA,
            ssim_k1: SSIM_K1,
            ssim_k2: SSIM_K2,
            hog_bins: HOG_BINS,
            hog_cell: HOG_CELL,
        },
        reports,
        warnings,
    };
    write_report(dir, Command::Sanity.name(), config, &result)?;
    Ok(result)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimingRow {
    pub explainer: usize,
    pub label: String,
    pub model: String,
    pub mean: f64,
    pub std: f64,
    pub min: f64,
    pub max: f64,
    pub runs: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchResult {
    pub warmup: usize,
    pub rows: Vec<TimingRow>,
}

/// Seconds per saliency map, measured strictly sequentially on the calling
/// thread.
pub fn cmd_bench(config: &RunConfig, dir: &Path) -> Result<BenchResult> {
    config.require_explainers()?;
    let (model, images) = load_inputs(config)?;
    create_dir(dir)?;
    let model_label = config.model.label();
    let mut rows = Vec::new();
    for (j, explainer) in config.explainers.iter().enumerate() {
        let stats = time_explainer(model.black_box(), &images, explainer, config.bench.warmup)?;
        rows.push(TimingRow {
            explainer: j,
            label: explainer.label(),
            model: model_label.clone(),
            mean: stats.mean,
            std: stats.std,
            min: stats.min,
            max: stats.max,
            runs: stats.runs,
        });
    }
    let path = dir.join("timing.csv");
    let mut csv = csv_writer(&path)?;
    csv.write_record(["explainer_index", "explainer", "model", "image", "seconds"])?;
    for row in &rows {
        for (i, s) in row.runs.iter().enumerate() {
            csv.serialize((row.explainer, &row.label, &row.model, i, s))?;
        }
    }
    csv.flush().map_err(|e| BenchError::io(&path, e))?;
    let result = BenchResult {
        warmup: config.bench.warmup,
        rows,
    };
    write_report(dir, Command::Bench.name(), config, &result)?;
    Ok(result)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FramesResult {
    pub files: Vec<String>,
    pub previews: Vec<String>,
}

/// Writes the configured synthetic frames as SBT1 tensors plus greyscale
/// PNG previews.
pub fn cmd_frames(config: &RunConfig, dir: &Path) -> Result<FramesResult> {
    let ImageSource::Frames(spec) = &config.images else {
        return Err(BenchError::config(
            "images.kind",
            "the frames command needs a synthetic frame source",
        ));
    };
    let frames = frames::generate(spec)?;
    let frame_dir = dir.join("frames");
    create_dir(&frame_dir)?;
    let (mut files, mut previews) = (Vec::new(), Vec::new());
    for (i, frame) in frames.iter().enumerate() {
        let sbt = frame_dir.join(format!("frame_{i:03}.sbt"));
        write_tensor(frame, &sbt)?;
        let png = frame_dir.join(format!("frame_{i:03}.png"));
        write_png(&png, frame.width(), frame.height(), &frame_rgb(frame))?;
        files.push(relative(dir, &sbt));
        previews.push(relative(dir, &png));
    }
    let result = FramesResult { files, previews };
    write_report(dir, Command::Frames.name(), config, &result)?;
    Ok(result)
}
