//! PNG heatmaps: min-max normalization, then a fixed piecewise-linear ramp.

use std::fs::File;
use std::io::BufWriter;
use std::path::Path;

use saliency_core::{normalize_map, Image, SaliencyMap};

use crate::error::{BenchError, Result};

/// Colour ramp stops `(position, [r, g, b])`, dark purple to pale yellow.
pub const RAMP: [(f64, [u8; 3]); 5] = [
    (0.0, [0, 0, 4]),
    (0.25, [87, 16, 110]),
    (0.5, [188, 55, 84]),
    (0.75, [249, 142, 9]),
    (1.0, [252, 255, 164]),
];

/// Colour of a normalized value; inputs are clamped to `[0, 1]`.
pub fn ramp(v: f64) -> [u8; 3] {
    let v = if v.is_nan() { 0.0 } else { v.clamp(0.0, 1.0) };
    let i = RAMP
        .windows(2)
        .position(|s| v <= s[1].0)
        .unwrap_or(RAMP.len() - 2);
    let ((p0, c0), (p1, c1)) = (RAMP[i], RAMP[i + 1]);
    let t = (v - p0) / (p1 - p0);
    let mut out = [0u8; 3];
    for k in 0..3 {
        out[k] = (c0[k] as f64 + t * (c1[k] as f64 - c0[k] as f64)).round() as u8;
    }
    out
}

/// RGB bytes of the heatmap, optionally blended over the channel mean of
/// `base` with opacity `alpha`.
pub fn heatmap_rgb(map: &SaliencyMap, base: Option<(&Image, f64)>) -> Vec<u8> {
    let norm = normalize_map(map);
    let grey = base.map(|(img, alpha)| (img.channel_mean(), alpha));
    let mut out = Vec::with_capacity(norm.values().len() * 3);
    for (p, &v) in norm.values().iter().enumerate() {
        let colour = ramp(v);
        match &grey {
            Some((g, alpha)) => {
                let bg = g.values()[p].clamp(0.0, 1.0) * 255.0;
                out.extend(
                    colour
                        .iter()
                        .map(|&c| (alpha * c as f64 + (1.0 - alpha) * bg).round() as u8),
                );
            }
            None => out.extend_from_slice(&colour),
        }
    }
    out
}

/// Greyscale preview of a frame (channel mean).
pub fn frame_rgb(image: &Image) -> Vec<u8> {
    image
        .channel_mean()
        .values()
        .iter()
        .flat_map(|&v| {
            let g = (v.clamp(0.0, 1.0) * 255.0).round() as u8;
            [g, g, g]
        })
        .collect()
}

pub fn write_png(path: &Path, width: usize, height: usize, rgb: &[u8]) -> Result<()> {
    let file = File::create(path).map_err(|e| BenchError::io(path, e))?;
    let mut encoder = png::Encoder::new(BufWriter::new(file), width as u32, height as u32);
    encoder.set_color(png::ColorType::Rgb);
    encoder.set_depth(png::BitDepth::Eight);
    let mut writer = encoder.write_header()?;
    writer.write_image_data(rgb)?;
    writer.finish()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ramp_hits_stops_and_interpolates() {
        for (p, c) in RAMP {
            assert_eq!(ramp(p), c);
        }
        assert_eq!(ramp(-1.0), RAMP[0].1);
        assert_eq!(ramp(2.0), RAMP[4].1);
        assert_eq!(ramp(0.125), [44, 8, 57]);
    }

    #[test]
    fn blend_endpoints() {
        let map = SaliencyMap::new(1, 2, vec![0.0, 1.0]).unwrap();
        let img = Image::filled(1, 2, 2, 1.0).unwrap();
        assert_eq!(heatmap_rgb(&map, None), [0, 0, 4, 252, 255, 164]);
        assert_eq!(
            heatmap_rgb(&map, Some((&img, 1.0))),
            heatmap_rgb(&map, None)
        );
        assert_eq!(heatmap_rgb(&map, Some((&img, 0.0))), [255; 6]);
    }

    #[test]
    fn png_decodes_to_the_same_pixels() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("h.png");
        let map = SaliencyMap::from_fn(3, 5, |y, x| (y * 5 + x) as f64).unwrap();
        let rgb = heatmap_rgb(&map, None);
        write_png(&path, 5, 3, &rgb).unwrap();
        let decoder = png::Decoder::new(std::io::BufReader::new(File::open(&path).unwrap()));
        let mut reader = decoder.read_info().unwrap();
        let mut buf = vec![0; reader.output_buffer_size().unwrap()];
        let info = reader.next_frame(&mut buf).unwrap();
        assert_eq!((info.width, info.height), (5, 3));
        assert_eq!(&buf[..info.buffer_size()], &rgb[..]);
    }
}
