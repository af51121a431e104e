//! End-to-end acceptance run: every criterion prints one PASS/FAIL line and
//! the target exits non-zero if any criterion fails. It has its own `main`
//! so the lines are printed even on success, and runs sequentially so the
//! timing criteria never share the CPU with other work.

use std::fs;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::{Duration, Instant};

use serde_json::json;

use saliency_bench::config::DEFAULT_DQN_REGION;
use saliency_bench::frames::{generate, FrameKind, FrameSpec};
use saliency_core::evaluate::{
    auc, hog_pearson, insertion_curve, sanity_check, spearman, ssim, time_explainer,
    InsertionCurve, SanityOptions, SanityReport, SSIM_K1, SSIM_K2, SSIM_SIGMA, SSIM_WINDOW,
};
use saliency_core::explain::{explain, occlusion_anchors, ExplainerConfig, LimeParams, RiseParams};
use saliency_core::io::{decode_tensor, encode_tensor};
use saliency_core::model::{
    build_constant_model, build_dqn_toy, build_maze_model, build_planted_dqn, build_planted_model,
    decode_model, encode_model, BlackBoxModel, Conv2d, Dense, Layer, LayeredModel, MazeLayout,
};
use saliency_core::perturb::{gaussian_blur, generate_rise_masks, occlude_patch, BLACK};
use saliency_core::{bilinear_upsample, normalize_map, Image, Rect, RngStream, SaliencyMap};

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

fn random_image(h: usize, w: usize, c: usize, seed: u64) -> Image {
    let mut rng = RngStream::new(seed);
    Image::from_fn(h, w, c, |_, _, _| rng.next_f64() as f32).unwrap()
}

fn random_map(h: usize, w: usize, seed: u64) -> SaliencyMap {
    let mut rng = RngStream::new(seed);
    SaliencyMap::from_fn(h, w, |_, _| rng.uniform(-2.0, 2.0)).unwrap()
}

fn frames(generator: FrameKind, count: usize, seed: u64, region: Rect) -> Vec<Image> {
    generate(&FrameSpec {
        generator,
        count,
        seed: Some(seed),
        region,
        ..FrameSpec::default()
    })
    .unwrap()
}

fn mean(values: &[f64]) -> f64 {
    values.iter().sum::<f64>() / values.len() as f64
}

fn mean_auc(
    model: &dyn BlackBoxModel,
    images: &[Image],
    config: &dyn Fn(usize) -> ExplainerConfig,
) -> f64 {
    let aucs: Vec<f64> = images
        .iter()
        .enumerate()
        .map(|(i, img)| {
            let map = explain(model, img, &config(i)).unwrap().saliency;
            insertion_curve(model, img, &map, 84).unwrap().auc()
        })
        .collect();
    mean(&aucs)
}

// 1. Analytic oracles on a constant model.
fn analytic_oracles() -> Outcome {
    let c = 0.7;
    let model = build_constant_model(&[c, 0.2, 0.1]).unwrap();
    let img = random_image(84, 84, 4, 1);
    let mut checks = Vec::new();

    let mut occlusion_exact = true;
    for config in [
        ExplainerConfig::occlusion_black(),
        ExplainerConfig::occlusion_grey(),
    ] {
        let map = explain(&model, &img, &config).unwrap().saliency;
        occlusion_exact &= map.values().iter().all(|&v| v == 1.0 - c);
    }
    checks.push(occlusion_exact);

    let mut noise_zero = true;
    for config in [
        ExplainerConfig::noise_blur(),
        ExplainerConfig::noise_black(),
    ] {
        let map = explain(&model, &img, &config).unwrap().saliency;
        noise_zero &= map.values().iter().all(|&v| v == 0.0);
    }
    checks.push(noise_zero);

    let seed = 21;
    let map = explain(
        &model,
        &img,
        &ExplainerConfig::Rise(RiseParams {
            seed,
            ..RiseParams::default()
        }),
    )
    .unwrap()
    .saliency;
    let masks = generate_rise_masks(2000, 8, 0.9, 84, 84, true, &mut RngStream::new(seed)).unwrap();
    let samples: Vec<f64> = masks
        .iter()
        .map(|m| c * m.values().iter().sum::<f64>() / (84.0 * 84.0) / 0.9)
        .collect();
    let m = mean(&samples);
    let sd =
        (samples.iter().map(|s| (s - m).powi(2)).sum::<f64>() / (samples.len() - 1) as f64).sqrt();
    let se = sd / (samples.len() as f64).sqrt();
    let rise_dev = (map.mean() - c).abs();
    checks.push(rise_dev <= 4.0 * se);

    let lime = LimeParams {
        seed: 3,
        ..LimeParams::default()
    };
    let expl = explain(&model, &img, &ExplainerConfig::Lime(lime))
        .unwrap()
        .lime
        .unwrap();
    let max_weight = expl.weights.iter().map(|w| w.abs()).fold(0.0, f64::max);
    checks.push(max_weight <= 1e-6);

    outcome(
        checks.iter().all(|&b| b),
        format!(
            "occlusion == 1-c: {}, noise == 0: {}, RISE |mean-c| = {rise_dev:.2e} (4 SE = {:.2e}), LIME max |w| = {max_weight:.1e} over {} segments",
            checks[0],
            checks[1],
            4.0 * se,
            expl.weights.len()
        ),
    )
}

fn naive_occlusion(
    model: &dyn BlackBoxModel,
    img: &Image,
    patch: usize,
    color: f32,
) -> SaliencyMap {
    let (h, w, _) = img.shape();
    let class = model.predict(img).unwrap().predicted_index;
    let mut values = vec![f64::NAN; h * w];
    // columns outermost, anchors visited right to left
    let xs: Vec<usize> = occlusion_anchors(w, patch).collect();
    let ys: Vec<usize> = occlusion_anchors(h, patch).collect();
    for &x0 in xs.iter().rev() {
        for &y0 in &ys {
            let occluded =
                occlude_patch(img, y0 as isize, x0 as isize, patch, patch, color).unwrap();
            let score = 1.0 - model.predict(&occluded).unwrap().probabilities[class];
            for x in x0..(x0 + patch).min(w) {
                for y in y0..(y0 + patch).min(h) {
                    values[y * w + x] = score;
                }
            }
        }
    }
    SaliencyMap::new(h, w, values).unwrap()
}

fn naive_upsample(small: &SaliencyMap, th: usize, tw: usize) -> SaliencyMap {
    let (sh, sw) = small.dims();
    SaliencyMap::from_fn(th, tw, |y, x| {
        let fy = if th > 1 {
            y as f64 * (sh - 1) as f64 / (th - 1) as f64
        } else {
            0.0
        };
        let fx = if tw > 1 {
            x as f64 * (sw - 1) as f64 / (tw - 1) as f64
        } else {
            0.0
        };
        let mut acc = 0.0;
        for yy in 0..sh {
            for xx in 0..sw {
                let wy = (1.0 - (fy - yy as f64).abs()).max(0.0);
                let wx = (1.0 - (fx - xx as f64).abs()).max(0.0);
                acc += wy * wx * small.get(yy, xx);
            }
        }
        acc
    })
    .unwrap()
}

fn naive_blur(img: &Image, sigma: f64) -> Vec<f64> {
    let (h, w, c) = img.shape();
    let r = (3.0 * sigma).ceil() as i64;
    let g = |d: i64| (-((d * d) as f64) / (2.0 * sigma * sigma)).exp();
    let mut out = Vec::with_capacity(h * w * c);
    for y in 0..h as i64 {
        for x in 0..w as i64 {
            for ch in 0..c {
                let (mut acc, mut norm) = (0.0, 0.0);
                for dy in -r..=r {
                    for dx in -r..=r {
                        let (yy, xx) = (y + dy, x + dx);
                        if yy < 0 || xx < 0 || yy >= h as i64 || xx >= w as i64 {
                            continue;
                        }
                        let k = g(dy) * g(dx);
                        acc += k * img.get(yy as usize, xx as usize, ch) as f64;
                        norm += k;
                    }
                }
                out.push((acc / norm).clamp(0.0, 1.0));
            }
        }
    }
    out
}

fn naive_ssim(a: &SaliencyMap, b: &SaliencyMap) -> f64 {
    let (x, y) = (normalize_map(a), normalize_map(b));
    let (h, w) = a.dims();
    let k = SSIM_WINDOW;
    let r = (k / 2) as f64;
    let mut window = vec![0.0; k * k];
    for i in 0..k {
        for j in 0..k {
            let d2 = (i as f64 - r).powi(2) + (j as f64 - r).powi(2);
            window[i * k + j] = (-d2 / (2.0 * SSIM_SIGMA * SSIM_SIGMA)).exp();
        }
    }
    let total: f64 = window.iter().sum();
    window.iter_mut().for_each(|v| *v /= total);
    let (c1, c2) = (SSIM_K1 * SSIM_K1, SSIM_K2 * SSIM_K2);
    let mut scores = Vec::new();
    for top in 0..=h - k {
        for left in 0..=w - k {
            let (mut mx, mut my) = (0.0, 0.0);
            for i in 0..k {
                for j in 0..k {
                    mx += window[i * k + j] * x.get(top + i, left + j);
                    my += window[i * k + j] * y.get(top + i, left + j);
                }
            }
            let (mut vx, mut vy, mut cov) = (0.0, 0.0, 0.0);
            for i in 0..k {
                for j in 0..k {
                    let (dx, dy) = (x.get(top + i, left + j) - mx, y.get(top + i, left + j) - my);
                    vx += window[i * k + j] * dx * dx;
                    vy += window[i * k + j] * dy * dy;
                    cov += window[i * k + j] * dx * dy;
                }
            }
            scores.push(
                ((2.0 * mx * my + c1) * (2.0 * cov + c2))
                    / ((mx * mx + my * my + c1) * (vx + vy + c2)),
            );
        }
    }
    mean(&scores)
}

// 2. Brute-force equivalence with independent implementations.
fn brute_force_equivalence() -> Outcome {
    let dqn = build_dqn_toy(4, &mut RngStream::new(2)).unwrap();
    let img = random_image(84, 84, 4, 3);
    let fast = explain(&dqn, &img, &ExplainerConfig::occlusion_black())
        .unwrap()
        .saliency;
    let slow = naive_occlusion(&dqn, &img, 5, BLACK);
    let occlusion_identical = fast
        .values()
        .iter()
        .zip(slow.values())
        .all(|(a, b)| a.to_bits() == b.to_bits());

    let mut upsample_err: f64 = 0.0;
    for (seed, (sh, sw, th, tw)) in [
        (2, 3, 17, 23),
        (5, 4, 84, 84),
        (1, 7, 9, 30),
        (17, 17, 84, 84),
    ]
    .into_iter()
    .enumerate()
    {
        let small = random_map(sh, sw, seed as u64);
        let a = bilinear_upsample(&small, th, tw).unwrap();
        let b = naive_upsample(&small, th, tw);
        upsample_err = a
            .values()
            .iter()
            .zip(b.values())
            .map(|(u, v)| (u - v).abs())
            .fold(upsample_err, f64::max);
    }

    let (h, w, cin, cout, k, stride) = (21, 19, 3, 5, 4, 2);
    let mut rng = RngStream::new(9);
    let mut conv = Conv2d::zeros(cout, cin, k, k, stride);
    conv.weights
        .iter_mut()
        .for_each(|v| *v = rng.uniform(-0.5, 0.5) as f32);
    conv.biases
        .iter_mut()
        .for_each(|v| *v = rng.uniform(-0.1, 0.1) as f32);
    let (oh, ow) = ((h - k) / stride + 1, (w - k) / stride + 1);
    let n = oh * ow * cout;
    let mut identity = Dense::zeros(n, n);
    (0..n).for_each(|i| identity.weights[i * n + i] = 1.0);
    let conv_model = LayeredModel::new(
        (h, w, cin),
        vec![
            Layer::Conv2d(conv.clone()),
            Layer::Flatten,
            Layer::Dense(identity),
            Layer::Softmax,
        ],
    )
    .unwrap();
    let conv_img = random_image(h, w, cin, 4);
    let logits = conv_model.predict(&conv_img).unwrap().logits;
    let mut conv_err: f64 = 0.0;
    for oy in 0..oh {
        for ox in 0..ow {
            for oc in 0..cout {
                let mut acc = conv.biases[oc] as f64;
                for ky in 0..k {
                    for kx in 0..k {
                        for ic in 0..cin {
                            acc += conv.weights[conv.weight_index(oc, ic, ky, kx)] as f64
                                * conv_img.get(oy * stride + ky, ox * stride + kx, ic) as f64;
                        }
                    }
                }
                conv_err = conv_err.max((logits[(oy * ow + ox) * cout + oc] - acc).abs());
            }
        }
    }

    let blur_img = random_image(17, 23, 2, 5);
    let blurred = gaussian_blur(&blur_img, 1.7).unwrap();
    let blur_err = blurred
        .data()
        .iter()
        .zip(naive_blur(&blur_img, 1.7))
        .map(|(&a, b)| (a as f64 - b).abs())
        .fold(0.0, f64::max);

    let (a, b) = (random_map(30, 28, 6), random_map(30, 28, 7));
    let ssim_err = (ssim(&a, &b).unwrap() - naive_ssim(&a, &b)).abs();

    let pass = occlusion_identical
        && upsample_err <= 1e-6
        && conv_err <= 1e-5
        && blur_err <= 1e-6
        && ssim_err <= 1e-6;
    outcome(
        pass,
        format!(
            "occlusion bit-identical: {occlusion_identical}; max error upsample {upsample_err:.1e}, conv {conv_err:.1e}, blur {blur_err:.1e}, ssim {ssim_err:.1e}"
        ),
    )
}

// 3. Faithfulness margin over uniform-random saliency.
fn faithfulness_margin() -> Outcome {
    let region = Rect::new(22, 22, 40, 40);
    let model = build_planted_model(region, (84, 84, 4), 4, &mut RngStream::new(11)).unwrap();
    let images = frames(FrameKind::PlantedRect, 20, 300, region);
    let random = mean_auc(&model, &images, &|i| ExplainerConfig::Random {
        seed: 1000 + i as u64,
    });
    let mut detail = format!("random {random:.3}");
    let mut pass = true;
    let configs = [
        ExplainerConfig::occlusion_black(),
        ExplainerConfig::noise_black(),
        ExplainerConfig::Rise(RiseParams {
            seed: 5,
            ..RiseParams::default()
        }),
    ];
    for config in configs {
        let auc = mean_auc(&model, &images, &|_| config.clone());
        pass &= auc >= random + 0.1;
        detail.push_str(&format!(", {} {auc:.3}", config.label()));
    }
    outcome(pass, detail)
}

fn interleaved_times(
    model: &dyn BlackBoxModel,
    images: &[Image],
    a: &ExplainerConfig,
    b: &ExplainerConfig,
) -> (f64, f64) {
    time_explainer(model, &images[..1], a, 1).unwrap();
    time_explainer(model, &images[..1], b, 1).unwrap();
    let (mut ta, mut tb) = (Vec::new(), Vec::new());
    for img in images {
        let one = std::slice::from_ref(img);
        ta.push(time_explainer(model, one, a, 0).unwrap().mean);
        tb.push(time_explainer(model, one, b, 0).unwrap().mean);
    }
    (mean(&ta), mean(&tb))
}

// 4. Black beats grey occlusion on grey-maze frames at equal cost.
fn grey_vs_black() -> Outcome {
    let layout = MazeLayout::default();
    let model = build_maze_model(layout, 4, 4, &mut RngStream::new(1)).unwrap();
    let images = frames(FrameKind::GreyMaze, 20, 400, Rect::new(0, 0, 1, 1));
    let (black, grey) = (
        ExplainerConfig::occlusion_black(),
        ExplainerConfig::occlusion_grey(),
    );
    let auc_black = mean_auc(&model, &images, &|_| black.clone());
    let auc_grey = mean_auc(&model, &images, &|_| grey.clone());
    let (tb, tg) = interleaved_times(&model, &images, &black, &grey);
    let spread = (tb - tg).abs() / tb.min(tg);
    outcome(
        auc_black > auc_grey && spread <= 0.10,
        format!(
            "AUC OS-black {auc_black:.3} vs OS-grey {auc_grey:.3}; mean time {:.1} ms vs {:.1} ms ({:.1}% apart)",
            tb * 1e3,
            tg * 1e3,
            spread * 100.0
        ),
    )
}

fn spearman_at(report: &SanityReport, depth: usize) -> f64 {
    report.rows[depth].spearman.mean.unwrap_or(f64::NAN)
}

// 5. Sanity checks separate a model-independent dummy from real explainers.
fn sanity_discrimination() -> Outcome {
    let region = DEFAULT_DQN_REGION;
    let model = build_planted_dqn(region, 4, &mut RngStream::new(7)).unwrap();
    let images = frames(FrameKind::PlantedRect, 4, 500, region);
    let rng = RngStream::new(1);
    let options = SanityOptions {
        reseed_per_depth: true,
        ..SanityOptions::default()
    };
    let full = model.parameterized_layers().len();

    let dummy = sanity_check(&model, &images, &ExplainerConfig::InputCopy, &rng, &options).unwrap();
    let dummy_ones = dummy.rows.iter().all(|r| {
        [r.spearman, r.ssim, r.hog_pearson]
            .iter()
            .all(|m| m.mean.is_some_and(|v| (v - 1.0).abs() <= 1e-12))
    });
    let mut pass = dummy_ones && dummy.rows.len() == full + 1;
    let mut detail = format!(
        "input-copy 1.0 at all {} depths: {dummy_ones}",
        dummy.rows.len()
    );

    let gated = [
        ExplainerConfig::occlusion_black(),
        ExplainerConfig::Rise(RiseParams {
            seed: 9,
            ..RiseParams::default()
        }),
    ];
    for config in &gated {
        let report = sanity_check(&model, &images, config, &rng, &options).unwrap();
        let (first, last) = (spearman_at(&report, 1), spearman_at(&report, full));
        pass &= last < 0.5 && last < first;
        detail.push_str(&format!(
            "; {} rho depth1 {first:.3} full {last:.3}",
            config.label()
        ));
    }
    let lime = LimeParams {
        seed: 9,
        ..LimeParams::default()
    };
    let informational = [
        ExplainerConfig::noise_blur(),
        ExplainerConfig::noise_black(),
        ExplainerConfig::Lime(lime),
    ];
    let mut info = Vec::new();
    for config in &informational {
        let report = sanity_check(&model, &images, config, &rng, &options).unwrap();
        info.push(format!(
            "{} {:.3}",
            config.label(),
            spearman_at(&report, full)
        ));
    }
    detail.push_str(&format!(
        " [not gated, full-randomization rho: {}]",
        info.join(", ")
    ));
    outcome(pass, detail)
}

// 6. Metric identities.
fn metric_identities() -> Outcome {
    let mut pass = true;
    for seed in 0..5 {
        let a = random_map(40, 36, seed);
        pass &= spearman(&a, &a).unwrap() == 1.0;
        pass &= (ssim(&a, &a).unwrap() - 1.0).abs() <= 1e-12;
        pass &= (hog_pearson(&a, &a).unwrap() - 1.0).abs() <= 1e-12;
        let b = random_map(40, 36, seed + 100);
        let rho = spearman(&a, &b).unwrap();
        for f in [|v: f64| v.powi(3), f64::exp] {
            pass &= spearman(&a.map(f).unwrap(), &b).unwrap() == rho;
            pass &= spearman(&a, &b.map(f).unwrap()).unwrap() == rho;
        }
    }
    let ramp = InsertionCurve::new(vec![0.0, 0.25, 1.0], vec![0.0, 0.25, 1.0], 0).unwrap();
    let trapezoid = InsertionCurve::new(vec![0.0, 0.5, 1.0], vec![0.0, 0.4, 0.4], 0).unwrap();
    let (r, t) = (auc(&ramp), auc(&trapezoid));
    pass &= (r - 0.5).abs() <= 1e-12 && (t - 0.3).abs() <= 1e-12;
    outcome(
        pass,
        format!(
            "self-similarity and monotone invariance hold: {pass}; ramp AUC {r}, trapezoid AUC {t}"
        ),
    )
}

fn bench_bin(args: &[&str], config: &Path, out: &Path) {
    let status = Command::new(env!("CARGO_BIN_EXE_saliency-bench"))
        .args(args)
        .arg("--config")
        .arg(config)
        .arg("--out")
        .arg(out)
        .status()
        .unwrap();
    assert!(status.success(), "{args:?} failed");
}

fn sbt_files(dir: &Path) -> Vec<PathBuf> {
    let mut out = Vec::new();
    for entry in fs::read_dir(dir).unwrap() {
        let path = entry.unwrap().path();
        if path.is_dir() {
            out.extend(sbt_files(&path));
        } else if path.extension().is_some_and(|e| e == "sbt") {
            out.push(path);
        }
    }
    out.sort();
    out
}

// 7. Reproducibility from embedded configs and byte-exact round trips.
fn reproducibility() -> Outcome {
    let tmp = tempfile::tempdir().unwrap();
    let config = json!({
        "seed": 77,
        "model": {"kind": "planted"},
        "images": {"kind": "frames", "generator": "planted-rect", "count": 2},
        "explainers": [
            {"kind": "occlusion", "color": 0.0},
            {"kind": "noise"},
            {"kind": "rise", "n": 200},
            {"kind": "lime", "n_samples": 80, "segmentation": {"kernel_size": 2.0, "max_dist": 8.0, "ratio": 0.5}}
        ],
        "sanity": {"max_images": 1}
    });
    let path = tmp.path().join("run.json");
    fs::write(&path, config.to_string()).unwrap();
    let mut compared = 0;
    let mut identical = true;
    for command in ["explain", "frames", "insertion", "sanity", "bench"] {
        let first = tmp.path().join(format!("{command}-1"));
        let second = tmp.path().join(format!("{command}-2"));
        bench_bin(&[command], &path, &first);
        bench_bin(&[command], &first.join(format!("{command}.json")), &second);
        let (a, b) = (sbt_files(&first), sbt_files(&second));
        identical &= a.len() == b.len();
        for (p, q) in a.iter().zip(&b) {
            identical &= p.strip_prefix(&first).unwrap() == q.strip_prefix(&second).unwrap();
            identical &= fs::read(p).unwrap() == fs::read(q).unwrap();
            compared += 1;
        }
        for csv in ["insertion_curves.csv", "sanity.csv"] {
            if first.join(csv).exists() {
                identical &=
                    fs::read(first.join(csv)).unwrap() == fs::read(second.join(csv)).unwrap();
            }
        }
    }

    let mut round_trips = true;
    for seed in 0..5 {
        let img = random_image(7 + seed as usize, 5, 3, seed);
        let bytes = encode_tensor(img.height(), img.width(), img.channels(), img.data()).unwrap();
        let t = decode_tensor(&bytes).unwrap();
        round_trips &= encode_tensor(t.height, t.width, t.channels, &t.data).unwrap() == bytes;
    }
    for model in [
        build_dqn_toy(4, &mut RngStream::new(3)).unwrap(),
        build_planted_dqn(DEFAULT_DQN_REGION, 4, &mut RngStream::new(4)).unwrap(),
        build_maze_model(MazeLayout::default(), 4, 3, &mut RngStream::new(5)).unwrap(),
    ] {
        let bytes = encode_model(&model);
        let decoded = decode_model(&bytes).unwrap();
        round_trips &= decoded == model && encode_model(&decoded) == bytes;
    }
    outcome(
        identical && compared == 12 && round_trips,
        format!("{compared} SBT1 files identical on re-run from embedded configs: {identical}; SBT1/SBM1 round trips: {round_trips}"),
    )
}

// 8. Runtime ordering and linear scaling of RISE.
fn runtime_ordering() -> Outcome {
    let model = build_dqn_toy(4, &mut RngStream::new(8)).unwrap();
    let images = frames(FrameKind::PlantedRect, 3, 800, Rect::new(22, 22, 40, 40));
    let rise = |n| {
        ExplainerConfig::Rise(RiseParams {
            n,
            seed: 1,
            ..RiseParams::default()
        })
    };
    // interleaved so that load drift on the machine hits both sides alike
    let (os, r2000) = interleaved_times(
        &model,
        &images,
        &ExplainerConfig::occlusion_black(),
        &rise(2000),
    );
    let (r500, r2000_again) = interleaved_times(&model, &images, &rise(500), &rise(2000));
    let ratio = r2000_again / r500;
    outcome(
        os < r2000 && (3.0..=5.0).contains(&ratio),
        format!("OS-black {os:.3} s < RISE(2000) {r2000:.3} s; RISE 2000/500 time ratio {ratio:.2} (target 4 +/- 1)"),
    )
}

fn main() {
    let criteria: [(&str, Option<Duration>, fn() -> Outcome); 8] = [
        (
            "analytic oracle suite",
            Some(Duration::from_secs(10)),
            analytic_oracles,
        ),
        (
            "brute-force equivalence",
            Some(Duration::from_secs(60)),
            brute_force_equivalence,
        ),
        (
            "faithfulness margin",
            Some(Duration::from_secs(300)),
            faithfulness_margin,
        ),
        (
            "grey-vs-black reproduction",
            Some(Duration::from_secs(300)),
            grey_vs_black,
        ),
        (
            "sanity-check discrimination",
            Some(Duration::from_secs(600)),
            sanity_discrimination,
        ),
        ("metric identities", None, metric_identities),
        ("reproducibility", None, reproducibility),
        (
            "runtime ordering",
            Some(Duration::from_secs(300)),
            runtime_ordering,
        ),
    ];
    let mut failed = Vec::new();
    for (i, (name, budget, check)) in criteria.into_iter().enumerate() {
        let start = Instant::now();
        let result = catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|e| {
            outcome(false, format!("panicked: {:?}", e.downcast_ref::<String>()))
        });
        let elapsed = start.elapsed();
        let in_time = budget.is_none_or(|b| elapsed <= b);
        let pass = result.pass && in_time;
        let budget_note = budget
            .map(|b| format!(" / budget {} s", b.as_secs()))
            .unwrap_or_default();
        println!(
            "criterion {} ({name}): {} [{:.1} s{budget_note}] {}",
            i + 1,
            if pass { "PASS" } else { "FAIL" },
            elapsed.as_secs_f64(),
            result.detail
        );
        if !pass {
            failed.push(i + 1);
        }
    }
    if failed.is_empty() {
        println!("acceptance: all 8 criteria passed");
    } else {
        println!("acceptance: failed criteria {failed:?}");
        std::process::exit(1);
    }
}
