use super::occlusion::{check_center, disc_pixels};
use crate::error::{Error, Result};
use crate::tensor::Image;

/// 1-D Gaussian taps for offsets `-radius..=radius`, radius `ceil(3 sigma)`.
fn gaussian_taps(sigma: f64) -> Vec<f64> {
    let radius = (3.0 * sigma).ceil() as i64;
    (-radius..=radius).map(|d| (-((d * d) as f64) / (2.0 * sigma * sigma)).exp()).collect()
}

/// In-bounds tap window `(first, last, kernel mass)` for every position on
/// an axis of length `len`.
fn axis_windows(len: usize, taps: &[f64]) -> Vec<(usize, usize, f64)> {
    let radius = taps.len() / 2;
    (0..len)
        .map(|pos| {
            let lo = pos.saturating_sub(radius);
            let hi = (pos + radius).min(len - 1);
            let norm = (lo..=hi).map(|q| taps[q + radius - pos]).sum();
            (lo, hi, norm)
        })
        .collect()
}

/// Full-image Gaussian blur, each channel independently.
pub fn gaussian_blur(image: &Image, sigma: f64) -> Result<Image> {
    if !(sigma > 0.0 && sigma.is_finite()) {
        return Err(Error::arg(format!("blur sigma must be positive, got {sigma}")));
    }
    let (h, w, c) = image.shape();
    let taps = gaussian_taps(sigma);
    let src: Vec<f64> = image.data().iter().map(|&v| v as f64).collect();
    let radius = taps.len() / 2;
    let mut tmp = vec![0.0; src.len()];
    for (x, &(lo, hi, norm)) in axis_windows(w, &taps).iter().enumerate() {
        for y in 0..h {
            for ch in 0..c {
                let acc: f64 = (lo..=hi).map(|q| taps[q + radius - x] * src[(y * w + q) * c + ch]).sum();
                tmp[(y * w + x) * c + ch] = acc / norm;
            }
        }
    }
    let mut out = vec![0.0; src.len()];
    for (y, &(lo, hi, norm)) in axis_windows(h, &taps).iter().enumerate() {
        for x in 0..w {
            for ch in 0..c {
                let acc: f64 = (lo..=hi).map(|q| taps[q + radius - y] * tmp[(q * w + x) * c + ch]).sum();
                out[(y * w + x) * c + ch] = acc / norm;
            }
        }
    }
    let mut blurred = image.clone();
    for (d, v) in blurred.data_mut().iter_mut().zip(out) {
        *d = (v as f32).clamp(0.0, 1.0);
    }
    Ok(blurred)
}

/// Takes `replacement` inside the disc of radius `r` around `(cy, cx)` and
/// `image` elsewhere.
pub fn composite_disc(image: &Image, replacement: &Image, cy: usize, cx: usize, r: usize) -> Result<Image> {
    if image.shape() != replacement.shape() {
        return Err(Error::ShapeMismatch {
            expected: format!("{:?}", image.shape()),
            actual: format!("{:?}", replacement.shape()),
        });
    }
    check_center(image, cy, cx)?;
    let mut out = image.clone();
    for (y, x) in disc_pixels(image.height(), image.width(), cy, cx, r) {
        out.pixel_mut(y, x).copy_from_slice(replacement.pixel(y, x));
    }
    Ok(out)
}

/// Blurs the whole image, then keeps the blurred values only inside the disc.
pub fn blur_circle(image: &Image, cy: usize, cx: usize, r: usize, sigma: f64) -> Result<Image> {
    check_center(image, cy, cx)?;
    let blurred = gaussian_blur(image, sigma)?;
    composite_disc(image, &blurred, cy, cx, r)
}
