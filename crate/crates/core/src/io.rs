//! SBT1 tensor files.
//!
//! Layout (all little-endian):
//!
//! | offset | size | field |
//! |-------:|-----:|-------|
//! | 0  | 4 | magic `SBT1` |
//! | 4  | 4 | height (`u32`) |
//! | 8  | 4 | width (`u32`) |
//! | 12 | 4 | channels (`u32`) |
//! | 16 | 4·h·w·c | `f32` values, row-major `(row, column, channel)` |
//!
//! Saliency maps, masks and segmentations use `channels = 1`.

use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::tensor::{Image, SaliencyMap};

pub const TENSOR_MAGIC: &[u8; 4] = b"SBT1";
const HEADER_LEN: usize = 16;

/// Raw decoded tensor.
#[derive(Debug, Clone, PartialEq)]
pub struct Tensor {
    pub height: usize,
    pub width: usize,
    pub channels: usize,
    pub data: Vec<f32>,
}

pub fn encode_tensor(height: usize, width: usize, channels: usize, data: &[f32]) -> Result<Vec<u8>> {
    let dims = [height, width, channels];
    let mut out = Vec::with_capacity(HEADER_LEN + data.len() * 4);
    out.extend_from_slice(TENSOR_MAGIC);
    for d in dims {
        let d = u32::try_from(d).map_err(|_| Error::InvalidDimension(format!("{d} exceeds u32")))?;
        out.extend_from_slice(&d.to_le_bytes());
    }
    if data.len() != height * width * channels {
        return Err(Error::ShapeMismatch {
            expected: format!("{} values", height * width * channels),
            actual: format!("{} values", data.len()),
        });
    }
    for v in data {
        out.extend_from_slice(&v.to_le_bytes());
    }
    Ok(out)
}

pub fn decode_tensor(bytes: &[u8]) -> Result<Tensor> {
    if bytes.len() < 4 || &bytes[..4] != TENSOR_MAGIC {
        return Err(Error::format(0, "missing SBT1 magic"));
    }
    if bytes.len() < HEADER_LEN {
        return Err(Error::format(bytes.len() as u64, "truncated header"));
    }
    let dim = |i: usize| u32::from_le_bytes(bytes[4 + 4 * i..8 + 4 * i].try_into().unwrap()) as usize;
    let (height, width, channels) = (dim(0), dim(1), dim(2));
    if height == 0 || width == 0 || channels == 0 {
        return Err(Error::format(4, format!("zero dimension in {height}x{width}x{channels}")));
    }
    let count = height
        .checked_mul(width)
        .and_then(|n| n.checked_mul(channels))
        .filter(|n| n.checked_mul(4).is_some_and(|b| b <= isize::MAX as usize))
        .ok_or_else(|| Error::format(4, format!("dimension overflow in {height}x{width}x{channels}")))?;
    let payload = &bytes[HEADER_LEN..];
    let needed = count * 4;
    if payload.len() < needed {
        let complete = payload.len() / 4;
        return Err(Error::format(
            (HEADER_LEN + complete * 4) as u64,
            format!("truncated payload: {complete} of {count} values present"),
        ));
    }
    if payload.len() > needed {
        return Err(Error::format((HEADER_LEN + needed) as u64, "trailing bytes after payload"));
    }
    let data = payload
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes(c.try_into().unwrap()))
        .collect();
    Ok(Tensor { height, width, channels, data })
}

pub fn write_tensor(image: &Image, path: impl AsRef<Path>) -> Result<()> {
    let (h, w, c) = image.shape();
    fs::write(path, encode_tensor(h, w, c, image.data())?)?;
    Ok(())
}

pub fn read_tensor(path: impl AsRef<Path>) -> Result<Image> {
    let t = decode_tensor(&fs::read(path)?)?;
    Image::new(t.height, t.width, t.channels, t.data)
        .map_err(|e| Error::format(HEADER_LEN as u64, format!("invalid image payload: {e}")))
}

/// Writes a saliency map as a single-channel tensor (values narrowed to `f32`).
pub fn write_saliency(map: &SaliencyMap, path: impl AsRef<Path>) -> Result<()> {
    let data: Vec<f32> = map.values().iter().map(|&v| v as f32).collect();
    fs::write(path, encode_tensor(map.height(), map.width(), 1, &data)?)?;
    Ok(())
}

pub fn read_saliency(path: impl AsRef<Path>) -> Result<SaliencyMap> {
    let t = decode_tensor(&fs::read(path)?)?;
    if t.channels != 1 {
        return Err(Error::format(12, format!("saliency tensor has {} channels", t.channels)));
    }
    SaliencyMap::new(t.height, t.width, t.data.iter().map(|&v| v as f64).collect())
        .map_err(|e| Error::format(HEADER_LEN as u64, e.to_string()))
}
