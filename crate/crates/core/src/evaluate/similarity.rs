//! Map similarity measures: Spearman rank correlation, SSIM and the Pearson
//! correlation of HOG features.

use crate::error::{Error, Result};
use crate::interp::normalize_map;
use crate::tensor::SaliencyMap;

pub const SSIM_WINDOW: usize = 11;
pub const SSIM_SIGMA: f64 = 1.5;
pub const SSIM_K1: f64 = 0.01;
pub const SSIM_K2: f64 = 0.03;
pub const HOG_BINS: usize = 9;
pub const HOG_CELL: usize = 12;

fn check_same_dims(a: &SaliencyMap, b: &SaliencyMap) -> Result<()> {
    if a.dims() != b.dims() {
        return Err(Error::ShapeMismatch { expected: format!("{:?}", a.dims()), actual: format!("{:?}", b.dims()) });
    }
    Ok(())
}

/// Pearson correlation; zero variance on either side is undefined.
pub fn pearson(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.len() != b.len() || a.is_empty() {
        return Err(Error::arg(format!("cannot correlate vectors of length {} and {}", a.len(), b.len())));
    }
    let n = a.len() as f64;
    let (ma, mb) = (a.iter().sum::<f64>() / n, b.iter().sum::<f64>() / n);
    let (mut cov, mut va, mut vb) = (0.0, 0.0, 0.0);
    for (&x, &y) in a.iter().zip(b) {
        let (dx, dy) = (x - ma, y - mb);
        cov += dx * dy;
        va += dx * dx;
        vb += dy * dy;
    }
    if va == 0.0 || vb == 0.0 {
        return Err(Error::UndefinedCorrelation);
    }
    Ok((cov / (va * vb).sqrt()).clamp(-1.0, 1.0))
}

/// 1-based ranks with ties sharing their average rank.
pub fn mid_ranks(values: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut ranks = vec![0.0; values.len()];
    let mut start = 0;
    while start < order.len() {
        let mut end = start + 1;
        while end < order.len() && values[order[end]] == values[order[start]] {
            end += 1;
        }
        let rank = (start + end + 1) as f64 / 2.0;
        for &i in &order[start..end] {
            ranks[i] = rank;
        }
        start = end;
    }
    ranks
}

/// Pearson correlation of mid-ranks.
pub fn spearman(a: &SaliencyMap, b: &SaliencyMap) -> Result<f64> {
    check_same_dims(a, b)?;
    pearson(&mid_ranks(a.values()), &mid_ranks(b.values()))
}

fn gaussian_window() -> Vec<f64> {
    let r = (SSIM_WINDOW / 2) as f64;
    let taps: Vec<f64> =
        (0..SSIM_WINDOW).map(|i| (-((i as f64 - r).powi(2)) / (2.0 * SSIM_SIGMA * SSIM_SIGMA)).exp()).collect();
    let total: f64 = taps.iter().sum();
    taps.into_iter().map(|t| t / total).collect()
}

/// Separable weighted sums over every fully contained window position.
fn filter_valid(values: &[f64], h: usize, w: usize, taps: &[f64]) -> Vec<f64> {
    let k = taps.len();
    let (oh, ow) = (h - k + 1, w - k + 1);
    let mut rows = vec![0.0; h * ow];
    for y in 0..h {
        for x in 0..ow {
            rows[y * ow + x] = taps.iter().enumerate().map(|(i, t)| t * values[y * w + x + i]).sum();
        }
    }
    let mut out = vec![0.0; oh * ow];
    for y in 0..oh {
        for x in 0..ow {
            out[y * ow + x] = taps.iter().enumerate().map(|(i, t)| t * rows[(y + i) * ow + x]).sum();
        }
    }
    out
}

/// Mean SSIM over all 11x11 Gaussian windows (sigma 1.5) of the two maps
/// after rescaling each to `[0, 1]`.
pub fn ssim(a: &SaliencyMap, b: &SaliencyMap) -> Result<f64> {
    check_same_dims(a, b)?;
    let (h, w) = a.dims();
    if h < SSIM_WINDOW || w < SSIM_WINDOW {
        return Err(Error::arg(format!("SSIM needs maps of at least {SSIM_WINDOW}x{SSIM_WINDOW}, got {h}x{w}")));
    }
    let (x, y) = (normalize_map(a).into_values(), normalize_map(b).into_values());
    let taps = gaussian_window();
    let product = |p: &[f64], q: &[f64]| p.iter().zip(q).map(|(u, v)| u * v).collect::<Vec<f64>>();
    let mx = filter_valid(&x, h, w, &taps);
    let my = filter_valid(&y, h, w, &taps);
    let sxx = filter_valid(&product(&x, &x), h, w, &taps);
    let syy = filter_valid(&product(&y, &y), h, w, &taps);
    let sxy = filter_valid(&product(&x, &y), h, w, &taps);
    let (c1, c2) = ((SSIM_K1).powi(2), (SSIM_K2).powi(2));
    let n = mx.len();
    let total: f64 = (0..n)
        .map(|i| ssim_window(mx[i], my[i], sxx[i] - mx[i] * mx[i], syy[i] - my[i] * my[i], sxy[i] - mx[i] * my[i], c1, c2))
        .sum();
    Ok(total / n as f64)
}

#[inline]
fn ssim_window(mx: f64, my: f64, vx: f64, vy: f64, cxy: f64, c1: f64, c2: f64) -> f64 {
    ((2.0 * mx * my + c1) * (2.0 * cxy + c2)) / ((mx * mx + my * my + c1) * (vx + vy + c2))
}

/// Magnitude-weighted unsigned orientation histograms (9 bins over
/// `[0, 180)` degrees) of central-difference gradients, one per 12x12 cell,
/// remainder cells at the borders included. Gradients on the outermost rows
/// and columns are taken as zero along the missing direction.
pub fn hog_features(map: &SaliencyMap) -> Vec<f64> {
    let (h, w) = map.dims();
    let (ch, cw) = (h.div_ceil(HOG_CELL), w.div_ceil(HOG_CELL));
    let mut hist = vec![0.0; ch * cw * HOG_BINS];
    for y in 0..h {
        for x in 0..w {
            let gx = if x > 0 && x + 1 < w { map.get(y, x + 1) - map.get(y, x - 1) } else { 0.0 };
            let gy = if y > 0 && y + 1 < h { map.get(y + 1, x) - map.get(y - 1, x) } else { 0.0 };
            let magnitude = gx.hypot(gy);
            if magnitude == 0.0 {
                continue;
            }
            let angle = gy.atan2(gx).to_degrees().rem_euclid(180.0);
            let bin = ((angle / (180.0 / HOG_BINS as f64)) as usize).min(HOG_BINS - 1);
            hist[((y / HOG_CELL) * cw + x / HOG_CELL) * HOG_BINS + bin] += magnitude;
        }
    }
    hist
}

pub fn hog_pearson(a: &SaliencyMap, b: &SaliencyMap) -> Result<f64> {
    check_same_dims(a, b)?;
    pearson(&hog_features(a), &hog_features(b))
}
