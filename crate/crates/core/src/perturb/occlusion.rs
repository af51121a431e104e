use crate::error::{Error, Result};
use crate::tensor::Image;

fn check_color(color: f32) -> Result<()> {
    if !(0.0..=1.0).contains(&color) {
        return Err(Error::arg(format!("occlusion color {color} outside [0, 1]")));
    }
    Ok(())
}

/// Sets every channel of the patch `[top, top + ph) x [left, left + pw)`,
/// clipped to the image, to `color`.
pub fn occlude_patch(image: &Image, top: isize, left: isize, ph: usize, pw: usize, color: f32) -> Result<Image> {
    check_color(color)?;
    let (h, w) = (image.height() as isize, image.width() as isize);
    let (y0, x0) = (top.max(0), left.max(0));
    let (y1, x1) = ((top + ph as isize).min(h), (left + pw as isize).min(w));
    if y0 >= y1 || x0 >= x1 {
        return Err(Error::arg(format!("patch at ({top}, {left}) of size {ph}x{pw} misses the image")));
    }
    let mut out = image.clone();
    for y in y0 as usize..y1 as usize {
        for x in x0 as usize..x1 as usize {
            out.pixel_mut(y, x).fill(color);
        }
    }
    Ok(out)
}

pub(crate) fn check_center(image: &Image, cy: usize, cx: usize) -> Result<()> {
    if cy >= image.height() || cx >= image.width() {
        return Err(Error::arg(format!(
            "center ({cy}, {cx}) outside {}x{} image",
            image.height(),
            image.width()
        )));
    }
    Ok(())
}

/// Pixel coordinates within Euclidean distance `r` of `(cy, cx)`, clipped.
pub(crate) fn disc_pixels(h: usize, w: usize, cy: usize, cx: usize, r: usize) -> impl Iterator<Item = (usize, usize)> {
    let r2 = (r * r) as i64;
    let (ylo, yhi) = (cy.saturating_sub(r), (cy + r).min(h - 1));
    let (xlo, xhi) = (cx.saturating_sub(r), (cx + r).min(w - 1));
    (ylo..=yhi).flat_map(move |y| {
        (xlo..=xhi).filter_map(move |x| {
            let (dy, dx) = (y as i64 - cy as i64, x as i64 - cx as i64);
            (dy * dy + dx * dx <= r2).then_some((y, x))
        })
    })
}

/// Sets all channels of pixels with `dy^2 + dx^2 <= r^2` to `color`.
pub fn occlude_circle(image: &Image, cy: usize, cx: usize, r: usize, color: f32) -> Result<Image> {
    check_color(color)?;
    check_center(image, cy, cx)?;
    if r == 0 {
        return Err(Error::arg("circle radius must be >= 1"));
    }
    let mut out = image.clone();
    for (y, x) in disc_pixels(image.height(), image.width(), cy, cx, r) {
        out.pixel_mut(y, x).fill(color);
    }
    Ok(out)
}
