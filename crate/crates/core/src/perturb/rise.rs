//! Random soft masks.
//!
//! Each mask draws an `s x s` Bernoulli(`p`) grid row-major, upsamples it
//! bilinearly to `(H + cell_h) x (W + cell_w)` with `cell = ceil(target / s)`,
//! and crops an `H x W` window at offset `(dy, dx)` drawn (in that order)
//! uniformly from `[0, cell_h) x [0, cell_w)`. With `shift` disabled the grid
//! is upsampled straight to `H x W` and no offsets are drawn.

use crate::error::{Error, Result};
use crate::interp::upsample_grid;
use crate::rng::RngStream;

/// A `[0, 1]`-valued spatial mask.
#[derive(Debug, Clone, PartialEq)]
pub struct Mask {
    height: usize,
    width: usize,
    values: Vec<f64>,
}

impl Mask {
    pub fn new(height: usize, width: usize, values: Vec<f64>) -> Result<Self> {
        if values.len() != height * width || height == 0 || width == 0 {
            return Err(Error::InvalidDimension(format!("mask {height}x{width} with {} values", values.len())));
        }
        if values.iter().any(|v| !(0.0..=1.0).contains(v)) {
            return Err(Error::arg("mask values must lie in [0, 1]"));
        }
        Ok(Self { height, width, values })
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    #[inline]
    pub fn get(&self, y: usize, x: usize) -> f64 {
        self.values[y * self.width + x]
    }
}

/// Reusable mask generator for fixed settings.
#[derive(Debug, Clone)]
pub struct RiseMaskSampler {
    grid: usize,
    p: f64,
    target_h: usize,
    target_w: usize,
    shift: bool,
    cell_h: usize,
    cell_w: usize,
}

impl RiseMaskSampler {
    pub fn new(grid: usize, p: f64, target_h: usize, target_w: usize, shift: bool) -> Result<Self> {
        if grid == 0 {
            return Err(Error::arg("mask grid size must be >= 1"));
        }
        if !(p > 0.0 && p < 1.0) {
            return Err(Error::arg(format!("mask keep probability must lie in (0, 1), got {p}")));
        }
        if target_h == 0 || target_w == 0 {
            return Err(Error::InvalidDimension(format!("target {target_h}x{target_w}")));
        }
        if grid > target_h || grid > target_w {
            return Err(Error::InvalidDimension(format!("grid {grid} exceeds target {target_h}x{target_w}")));
        }
        Ok(Self {
            grid,
            p,
            target_h,
            target_w,
            shift,
            cell_h: target_h.div_ceil(grid),
            cell_w: target_w.div_ceil(grid),
        })
    }

    pub fn sample(&self, rng: &mut RngStream) -> Mask {
        let s = self.grid;
        let cells: Vec<f64> = (0..s * s).map(|_| if rng.bernoulli(self.p) { 1.0 } else { 0.0 }).collect();
        self.expand(&cells, rng)
    }

    fn expand(&self, cells: &[f64], rng: &mut RngStream) -> Mask {
        let s = self.grid;
        let (h, w) = (self.target_h, self.target_w);
        let values = if self.shift {
            let (uh, uw) = (h + self.cell_h, w + self.cell_w);
            let dy = rng.below(self.cell_h as u64) as usize;
            let dx = rng.below(self.cell_w as u64) as usize;
            let up = upsample_grid(cells, s, s, uh, uw);
            let mut out = Vec::with_capacity(h * w);
            for y in 0..h {
                out.extend_from_slice(&up[(y + dy) * uw + dx..(y + dy) * uw + dx + w]);
            }
            out
        } else {
            upsample_grid(cells, s, s, h, w)
        };
        Mask { height: h, width: w, values: values.into_iter().map(|v| v.clamp(0.0, 1.0)).collect() }
    }
}

pub fn generate_rise_masks(
    n: usize,
    grid: usize,
    p: f64,
    target_h: usize,
    target_w: usize,
    shift: bool,
    rng: &mut RngStream,
) -> Result<Vec<Mask>> {
    if n == 0 {
        return Err(Error::arg("number of masks must be >= 1"));
    }
    let sampler = RiseMaskSampler::new(grid, p, target_h, target_w, shift)?;
    Ok((0..n).map(|_| sampler.sample(rng)).collect())
}
