//! SBM1 model files.
//!
//! ```text
//! magic "SBM1"
//! u32 input height, u32 input width, u32 input channels
//! u32 layer count
//! per layer: u8 tag (1 conv2d, 2 dense, 3 relu, 4 flatten, 5 softmax)
//!   conv2d: u32 out_ch, in_ch, kh, kw, stride; f32 weights; f32 biases
//!   dense:  u32 out, in; f32 weights; f32 biases
//! ```
//!
//! Integers and floats are little-endian; weights are row-major with the
//! output index slowest.

use std::fs;
use std::path::Path;

use super::{Conv2d, Dense, Layer, LayeredModel};
use crate::error::{Error, Result};

pub const MODEL_MAGIC: &[u8; 4] = b"SBM1";

const TAG_CONV: u8 = 1;
const TAG_DENSE: u8 = 2;
const TAG_RELU: u8 = 3;
const TAG_FLATTEN: u8 = 4;
const TAG_SOFTMAX: u8 = 5;

pub fn encode_model(model: &LayeredModel) -> Vec<u8> {
    let mut out = MODEL_MAGIC.to_vec();
    let (h, w, c) = model.input_shape();
    for d in [h, w, c, model.layers().len()] {
        out.extend_from_slice(&(d as u32).to_le_bytes());
    }
    let put_u32s = |out: &mut Vec<u8>, vals: &[usize]| {
        for &v in vals {
            out.extend_from_slice(&(v as u32).to_le_bytes());
        }
    };
    let put_f32s = |out: &mut Vec<u8>, vals: &[f32]| {
        for v in vals {
            out.extend_from_slice(&v.to_le_bytes());
        }
    };
    for layer in model.layers() {
        match layer {
            Layer::Conv2d(cv) => {
                out.push(TAG_CONV);
                put_u32s(&mut out, &[cv.out_channels, cv.in_channels, cv.kernel_h, cv.kernel_w, cv.stride]);
                put_f32s(&mut out, &cv.weights);
                put_f32s(&mut out, &cv.biases);
            }
            Layer::Dense(d) => {
                out.push(TAG_DENSE);
                put_u32s(&mut out, &[d.out_dim, d.in_dim]);
                put_f32s(&mut out, &d.weights);
                put_f32s(&mut out, &d.biases);
            }
            Layer::Relu => out.push(TAG_RELU),
            Layer::Flatten => out.push(TAG_FLATTEN),
            Layer::Softmax => out.push(TAG_SOFTMAX),
        }
    }
    out
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize, what: &str) -> Result<&'a [u8]> {
        if self.bytes.len() - self.pos < n {
            return Err(Error::format(self.bytes.len() as u64, format!("truncated while reading {what}")));
        }
        let s = &self.bytes[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    fn u8(&mut self, what: &str) -> Result<u8> {
        Ok(self.take(1, what)?[0])
    }

    fn u32(&mut self, what: &str) -> Result<usize> {
        Ok(u32::from_le_bytes(self.take(4, what)?.try_into().unwrap()) as usize)
    }

    fn f32s(&mut self, count: usize, what: &str) -> Result<Vec<f32>> {
        let len = count
            .checked_mul(4)
            .ok_or_else(|| Error::format(self.pos as u64, format!("{what} size overflow")))?;
        Ok(self.take(len, what)?.chunks_exact(4).map(|c| f32::from_le_bytes(c.try_into().unwrap())).collect())
    }
}

pub fn decode_model(bytes: &[u8]) -> Result<LayeredModel> {
    if bytes.len() < 4 || &bytes[..4] != MODEL_MAGIC {
        return Err(Error::format(0, "missing SBM1 magic"));
    }
    let mut r = Reader { bytes, pos: 4 };
    let shape = (r.u32("input height")?, r.u32("input width")?, r.u32("input channels")?);
    let count = r.u32("layer count")?;
    let mut layers = Vec::new();
    for _ in 0..count {
        let offset = r.pos as u64;
        let layer = match r.u8("layer tag")? {
            TAG_CONV => {
                let dims: Vec<usize> = (0..5).map(|_| r.u32("conv2d shape")).collect::<Result<_>>()?;
                let n = dims[..4].iter().try_fold(1usize, |a, &d| a.checked_mul(d));
                let n = n.ok_or_else(|| Error::format(offset, "conv2d shape overflow"))?;
                Layer::Conv2d(Conv2d {
                    out_channels: dims[0],
                    in_channels: dims[1],
                    kernel_h: dims[2],
                    kernel_w: dims[3],
                    stride: dims[4],
                    weights: r.f32s(n, "conv2d weights")?,
                    biases: r.f32s(dims[0], "conv2d biases")?,
                })
            }
            TAG_DENSE => {
                let (out_dim, in_dim) = (r.u32("dense shape")?, r.u32("dense shape")?);
                let n = out_dim.checked_mul(in_dim).ok_or_else(|| Error::format(offset, "dense shape overflow"))?;
                Layer::Dense(Dense {
                    out_dim,
                    in_dim,
                    weights: r.f32s(n, "dense weights")?,
                    biases: r.f32s(out_dim, "dense biases")?,
                })
            }
            TAG_RELU => Layer::Relu,
            TAG_FLATTEN => Layer::Flatten,
            TAG_SOFTMAX => Layer::Softmax,
            tag => return Err(Error::format(offset, format!("unknown layer tag {tag}"))),
        };
        layers.push(layer);
    }
    if r.pos != bytes.len() {
        return Err(Error::format(r.pos as u64, "trailing bytes after last layer"));
    }
    LayeredModel::new(shape, layers).map_err(|e| Error::format(16, format!("shape mismatch: {e}")))
}

pub fn write_model(model: &LayeredModel, path: impl AsRef<Path>) -> Result<()> {
    fs::write(path, encode_model(model))?;
    Ok(())
}

pub fn read_model(path: impl AsRef<Path>) -> Result<LayeredModel> {
    decode_model(&fs::read(path)?)
}
