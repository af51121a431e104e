//! Align-corners bilinear interpolation and range normalization.
//!
//! Output index `i` of an axis of length `t` samples the source axis of length
//! `s` at `i * (s - 1) / (t - 1)` (or `0` when `t == 1`), so the four corner
//! cells of the output coincide with the four corner cells of the input.

use crate::error::{Error, Result};
use crate::tensor::SaliencyMap;

pub fn bilinear_upsample(small: &SaliencyMap, target_h: usize, target_w: usize) -> Result<SaliencyMap> {
    if target_h == 0 || target_w == 0 {
        return Err(Error::InvalidDimension(format!("target {target_h}x{target_w}")));
    }
    if small.height() > target_h || small.width() > target_w {
        return Err(Error::InvalidDimension(format!(
            "cannot upsample {}x{} to smaller {target_h}x{target_w}",
            small.height(),
            small.width()
        )));
    }
    let values = upsample_grid(small.values(), small.height(), small.width(), target_h, target_w);
    SaliencyMap::new(target_h, target_w, values)
}

/// Source coordinate `(lower index, upper index, fraction)` for each output index.
fn axis_taps(src: usize, dst: usize) -> Vec<(usize, usize, f64)> {
    (0..dst)
        .map(|i| {
            if src == 1 || dst == 1 {
                return (0, 0, 0.0);
            }
            let pos = i as f64 * (src - 1) as f64 / (dst - 1) as f64;
            let lo = (pos.floor() as usize).min(src - 1);
            let hi = (lo + 1).min(src - 1);
            (lo, hi, pos - lo as f64)
        })
        .collect()
}

/// Row-major bilinear resampling of a raw grid. Dimensions are assumed valid.
pub(crate) fn upsample_grid(src: &[f64], sh: usize, sw: usize, th: usize, tw: usize) -> Vec<f64> {
    let rows = axis_taps(sh, th);
    let cols = axis_taps(sw, tw);
    let mut out = Vec::with_capacity(th * tw);
    for &(y0, y1, fy) in &rows {
        for &(x0, x1, fx) in &cols {
            let top = src[y0 * sw + x0] * (1.0 - fx) + src[y0 * sw + x1] * fx;
            let bottom = src[y1 * sw + x0] * (1.0 - fx) + src[y1 * sw + x1] * fx;
            out.push(top * (1.0 - fy) + bottom * fy);
        }
    }
    out
}

/// Affine rescale into `[0, 1]`; a constant map becomes all zeros.
pub fn normalize_map(map: &SaliencyMap) -> SaliencyMap {
    let (lo, hi) = (map.min(), map.max());
    let range = hi - lo;
    let values = if range > 0.0 {
        map.values().iter().map(|&v| ((v - lo) / range).clamp(0.0, 1.0)).collect()
    } else {
        vec![0.0; map.values().len()]
    };
    SaliencyMap::new(map.height(), map.width(), values).expect("normalized map is finite")
}
