//! Dense image and saliency grids.
//!
//! Images hold `f32` intensities in `[0, 1]`, laid out row-major as
//! `(row, column, channel)`. Saliency maps are single-channel `f64` grids
//! with unbounded (but finite) values.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A `height x width x channels` image with intensities in `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Image {
    height: usize,
    width: usize,
    channels: usize,
    data: Vec<f32>,
}

impl Image {
    pub fn new(height: usize, width: usize, channels: usize, data: Vec<f32>) -> Result<Self> {
        check_dims(height, width, channels)?;
        let expected = height * width * channels;
        if data.len() != expected {
            return Err(Error::ShapeMismatch {
                expected: format!("{expected} values"),
                actual: format!("{} values", data.len()),
            });
        }
        if let Some(pos) = data.iter().position(|v| !(0.0..=1.0).contains(v)) {
            return Err(Error::arg(format!(
                "intensity {} at index {pos} is outside [0, 1]",
                data[pos]
            )));
        }
        Ok(Self { height, width, channels, data })
    }

    pub fn filled(height: usize, width: usize, channels: usize, value: f32) -> Result<Self> {
        check_dims(height, width, channels)?;
        Self::new(height, width, channels, vec![value; height * width * channels])
    }

    pub fn zeros(height: usize, width: usize, channels: usize) -> Result<Self> {
        Self::filled(height, width, channels, 0.0)
    }

    /// Converts 8-bit intensities by dividing by 255.
    pub fn from_u8(height: usize, width: usize, channels: usize, bytes: &[u8]) -> Result<Self> {
        Self::new(height, width, channels, bytes.iter().map(|&b| b as f32 / 255.0).collect())
    }

    /// Builds an image from a closure evaluated at every `(row, col, channel)`.
    /// Values are clamped into `[0, 1]`.
    pub fn from_fn(
        height: usize,
        width: usize,
        channels: usize,
        mut f: impl FnMut(usize, usize, usize) -> f32,
    ) -> Result<Self> {
        check_dims(height, width, channels)?;
        let mut data = Vec::with_capacity(height * width * channels);
        for y in 0..height {
            for x in 0..width {
                for c in 0..channels {
                    data.push(f(y, x, c).clamp(0.0, 1.0));
                }
            }
        }
        Ok(Self { height, width, channels, data })
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn shape(&self) -> (usize, usize, usize) {
        (self.height, self.width, self.channels)
    }

    pub fn data(&self) -> &[f32] {
        &self.data
    }

    pub fn pixel_count(&self) -> usize {
        self.height * self.width
    }

    #[inline]
    pub fn get(&self, y: usize, x: usize, c: usize) -> f32 {
        self.data[(y * self.width + x) * self.channels + c]
    }

    /// All channels of the pixel at `(y, x)`.
    #[inline]
    pub fn pixel(&self, y: usize, x: usize) -> &[f32] {
        let start = (y * self.width + x) * self.channels;
        &self.data[start..start + self.channels]
    }

    /// Mutable access used by the perturbation primitives. Callers must keep
    /// values inside `[0, 1]`.
    pub(crate) fn pixel_mut(&mut self, y: usize, x: usize) -> &mut [f32] {
        let start = (y * self.width + x) * self.channels;
        &mut self.data[start..start + self.channels]
    }

    pub(crate) fn data_mut(&mut self) -> &mut [f32] {
        &mut self.data
    }

    /// Per-pixel channel mean as a saliency-shaped grid.
    pub fn channel_mean(&self) -> SaliencyMap {
        let c = self.channels as f64;
        let values = self
            .data
            .chunks_exact(self.channels)
            .map(|px| px.iter().map(|&v| v as f64).sum::<f64>() / c)
            .collect();
        SaliencyMap { height: self.height, width: self.width, values }
    }
}

/// A per-pixel relevance grid.
#[derive(Debug, Clone, PartialEq)]
pub struct SaliencyMap {
    height: usize,
    width: usize,
    values: Vec<f64>,
}

impl SaliencyMap {
    pub fn new(height: usize, width: usize, values: Vec<f64>) -> Result<Self> {
        check_dims(height, width, 1)?;
        if values.len() != height * width {
            return Err(Error::ShapeMismatch {
                expected: format!("{} values", height * width),
                actual: format!("{} values", values.len()),
            });
        }
        if let Some(pos) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::arg(format!("non-finite saliency value at index {pos}")));
        }
        Ok(Self { height, width, values })
    }

    pub fn filled(height: usize, width: usize, value: f64) -> Result<Self> {
        check_dims(height, width, 1)?;
        Self::new(height, width, vec![value; height * width])
    }

    pub fn from_fn(
        height: usize,
        width: usize,
        mut f: impl FnMut(usize, usize) -> f64,
    ) -> Result<Self> {
        check_dims(height, width, 1)?;
        let mut values = Vec::with_capacity(height * width);
        for y in 0..height {
            for x in 0..width {
                values.push(f(y, x));
            }
        }
        Self::new(height, width, values)
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.height, self.width)
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    #[inline]
    pub fn get(&self, y: usize, x: usize) -> f64 {
        self.values[y * self.width + x]
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn mean(&self) -> f64 {
        self.values.iter().sum::<f64>() / self.values.len() as f64
    }

    /// Applies `f` element-wise. The result must stay finite.
    pub fn map(&self, f: impl Fn(f64) -> f64) -> Result<Self> {
        Self::new(self.height, self.width, self.values.iter().map(|&v| f(v)).collect())
    }

    pub fn abs(&self) -> Self {
        Self {
            height: self.height,
            width: self.width,
            values: self.values.iter().map(|v| v.abs()).collect(),
        }
    }
}

/// Axis-aligned pixel rectangle `[top, top + height) x [left, left + width)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Rect {
    pub top: usize,
    pub left: usize,
    pub height: usize,
    pub width: usize,
}

impl Rect {
    pub fn new(top: usize, left: usize, height: usize, width: usize) -> Self {
        Self { top, left, height, width }
    }

    pub fn bottom(&self) -> usize {
        self.top + self.height
    }

    pub fn right(&self) -> usize {
        self.left + self.width
    }

    pub fn area(&self) -> usize {
        self.height * self.width
    }

    #[inline]
    pub fn contains(&self, y: usize, x: usize) -> bool {
        y >= self.top && y < self.bottom() && x >= self.left && x < self.right()
    }

    pub fn fits_within(&self, height: usize, width: usize) -> bool {
        self.height > 0 && self.width > 0 && self.bottom() <= height && self.right() <= width
    }
}

pub(crate) fn check_dims(height: usize, width: usize, channels: usize) -> Result<()> {
    if height == 0 || width == 0 || channels == 0 {
        return Err(Error::InvalidDimension(format!(
            "{height}x{width}x{channels} has a zero-sized axis"
        )));
    }
    Ok(())
}
