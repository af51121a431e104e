//! Quickshift superpixels and superpixel deletion.

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::RngStream;
use crate::tensor::Image;

/// Scale of the density tie-breaking noise added to every pixel.
const TIE_BREAK: f64 = 1e-5;

/// Label grid with consecutive labels `0..n_segments`, each segment
/// 4-connected.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Segmentation {
    height: usize,
    width: usize,
    labels: Vec<u32>,
    n_segments: usize,
}

impl Segmentation {
    /// Validates an arbitrary label grid. Labels must be consecutive from 0
    /// but segments need not be connected; see [`Segmentation::connected`].
    pub fn new(height: usize, width: usize, labels: Vec<u32>) -> Result<Self> {
        if height == 0 || width == 0 || labels.len() != height * width {
            return Err(Error::InvalidDimension(format!(
                "segmentation {height}x{width} with {} labels",
                labels.len()
            )));
        }
        let n_segments = labels.iter().map(|&l| l as usize + 1).max().unwrap_or(0);
        let mut seen = vec![false; n_segments];
        for &l in &labels {
            seen[l as usize] = true;
        }
        if let Some(missing) = seen.iter().position(|s| !s) {
            return Err(Error::arg(format!("label {missing} is unused; labels must be consecutive")));
        }
        Ok(Self { height, width, labels, n_segments })
    }

    /// Splits every label into its 4-connected components, relabelled in
    /// row-major order of first occurrence.
    pub fn connected(&self) -> Segmentation {
        let (h, w) = (self.height, self.width);
        let mut out = vec![u32::MAX; h * w];
        let mut next = 0u32;
        let mut queue = VecDeque::new();
        for start in 0..h * w {
            if out[start] != u32::MAX {
                continue;
            }
            let label = self.labels[start];
            out[start] = next;
            queue.push_back(start);
            while let Some(p) = queue.pop_front() {
                let (y, x) = (p / w, p % w);
                let mut visit = |q: usize| {
                    if out[q] == u32::MAX && self.labels[q] == label {
                        out[q] = next;
                        queue.push_back(q);
                    }
                };
                if y > 0 {
                    visit(p - w);
                }
                if y + 1 < h {
                    visit(p + w);
                }
                if x > 0 {
                    visit(p - 1);
                }
                if x + 1 < w {
                    visit(p + 1);
                }
            }
            next += 1;
        }
        Segmentation { height: h, width: w, labels: out, n_segments: next as usize }
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn labels(&self) -> &[u32] {
        &self.labels
    }

    pub fn n_segments(&self) -> usize {
        self.n_segments
    }

    #[inline]
    pub fn label(&self, y: usize, x: usize) -> usize {
        self.labels[y * self.width + x] as usize
    }

    /// Pixel count of every segment.
    pub fn areas(&self) -> Vec<usize> {
        let mut areas = vec![0; self.n_segments];
        for &l in &self.labels {
            areas[l as usize] += 1;
        }
        areas
    }

    /// Flat pixel indices of every segment, each list in row-major order.
    pub fn members(&self) -> Vec<Vec<usize>> {
        let mut members = vec![Vec::new(); self.n_segments];
        for (i, &l) in self.labels.iter().enumerate() {
            members[l as usize].push(i);
        }
        members
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct QuickshiftParams {
    /// Width of the Gaussian density kernel; the search window spans
    /// `ceil(3 * kernel_size)` pixels in each direction.
    pub kernel_size: f64,
    /// Links longer than this (in joint feature space) are cut.
    pub max_dist: f64,
    /// Weight of colour against spatial distance.
    pub ratio: f64,
}

impl Default for QuickshiftParams {
    fn default() -> Self {
        Self { kernel_size: 4.0, max_dist: 200.0, ratio: 0.2 }
    }
}

/// Squared joint-space distance between pixels `p` and `q`.
#[inline]
fn joint_dist2(feat: &[f64], c: usize, p: usize, q: usize, dy: f64, dx: f64) -> f64 {
    let (a, b) = (&feat[p * c..(p + 1) * c], &feat[q * c..(q + 1) * c]);
    a.iter().zip(b).map(|(u, v)| (u - v) * (u - v)).sum::<f64>() + dy * dy + dx * dx
}

/// Quickshift mode seeking in `(ratio * channels, y, x)` space.
///
/// Density is a Gaussian kernel sum over the search window, plus a uniform
/// tie-break draw in `[0, 1e-5)` per pixel (row-major, from `rng`). Each pixel
/// links to the closest pixel of strictly higher density in its window;
/// links longer than `max_dist` and pixels without such a neighbour become
/// roots. Trees become segments, which are then split into 4-connected
/// components.
pub fn quickshift_segment(image: &Image, params: &QuickshiftParams, rng: &mut RngStream) -> Result<Segmentation> {
    if !(params.kernel_size > 0.0) || !(params.max_dist >= 0.0) || !(params.ratio >= 0.0) {
        return Err(Error::arg(format!("invalid quickshift parameters {params:?}")));
    }
    let (h, w, c) = image.shape();
    let feat: Vec<f64> = image.data().iter().map(|&v| v as f64 * params.ratio).collect();
    let window = (3.0 * params.kernel_size).ceil() as usize;
    let inv = -0.5 / (params.kernel_size * params.kernel_size);

    let mut density = vec![0.0; h * w];
    for y in 0..h {
        for x in 0..w {
            let p = y * w + x;
            let mut total = 0.0;
            for yy in y.saturating_sub(window)..(y + window + 1).min(h) {
                for xx in x.saturating_sub(window)..(x + window + 1).min(w) {
                    let d2 = joint_dist2(&feat, c, p, yy * w + xx, y as f64 - yy as f64, x as f64 - xx as f64);
                    total += (d2 * inv).exp();
                }
            }
            density[p] = total;
        }
    }
    for d in &mut density {
        *d += TIE_BREAK * rng.next_f64();
    }

    let max_d2 = params.max_dist * params.max_dist;
    let mut parent: Vec<usize> = (0..h * w).collect();
    for y in 0..h {
        for x in 0..w {
            let p = y * w + x;
            let mut best = f64::INFINITY;
            for yy in y.saturating_sub(window)..(y + window + 1).min(h) {
                for xx in x.saturating_sub(window)..(x + window + 1).min(w) {
                    let q = yy * w + xx;
                    if density[q] > density[p] {
                        let d2 = joint_dist2(&feat, c, p, q, y as f64 - yy as f64, x as f64 - xx as f64);
                        if d2 < best {
                            best = d2;
                            parent[p] = q;
                        }
                    }
                }
            }
            if best > max_d2 {
                parent[p] = p;
            }
        }
    }

    // parents have strictly higher density, so chains terminate
    let mut root = vec![usize::MAX; h * w];
    let mut path = Vec::new();
    for p in 0..h * w {
        let mut r = p;
        while root[r] == usize::MAX && parent[r] != r {
            path.push(r);
            r = parent[r];
        }
        let top = if root[r] == usize::MAX { r } else { root[r] };
        root[r] = top;
        for q in path.drain(..) {
            root[q] = top;
        }
    }
    let mut ids = vec![u32::MAX; h * w];
    let mut next = 0u32;
    let labels: Vec<u32> = root
        .iter()
        .map(|&r| {
            if ids[r] == u32::MAX {
                ids[r] = next;
                next += 1;
            }
            ids[r]
        })
        .collect();
    Ok(Segmentation::new(h, w, labels)?.connected())
}

/// Zeroes every channel of the pixels belonging to the listed segments.
pub fn delete_superpixels(image: &Image, seg: &Segmentation, off: &[usize]) -> Result<Image> {
    if (seg.height, seg.width) != (image.height(), image.width()) {
        return Err(Error::ShapeMismatch {
            expected: format!("{}x{}", image.height(), image.width()),
            actual: format!("{}x{}", seg.height, seg.width),
        });
    }
    let mut mask = vec![false; seg.n_segments];
    for &l in off {
        if l >= seg.n_segments {
            return Err(Error::arg(format!("label {l} out of range 0..{}", seg.n_segments)));
        }
        mask[l] = true;
    }
    let mut out = image.clone();
    let c = image.channels();
    for (px, &l) in out.data_mut().chunks_exact_mut(c).zip(&seg.labels) {
        if mask[l as usize] {
            px.fill(0.0);
        }
    }
    Ok(out)
}
