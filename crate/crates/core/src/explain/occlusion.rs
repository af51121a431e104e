use serde::{Deserialize, Serialize};

use super::{class_probability, Target};
use crate::error::{Error, Result};
use crate::model::BlackBoxModel;
use crate::perturb::{occlude_patch, GREY};
use crate::tensor::{Image, SaliencyMap};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct OcclusionParams {
    /// Side length of the square patch.
    pub patch: usize,
    /// Fill value of the patch.
    pub color: f32,
    /// Anchor spacing; `None` tiles without overlap (stride = patch).
    pub stride: Option<usize>,
    pub target: Target,
}

impl Default for OcclusionParams {
    fn default() -> Self {
        Self { patch: 5, color: GREY, stride: None, target: Target::Argmax }
    }
}

impl OcclusionParams {
    pub fn stride(&self) -> usize {
        self.stride.unwrap_or(self.patch)
    }
}

/// Patch anchors along an axis: multiples of `stride` below `len`.
pub fn occlusion_anchors(len: usize, stride: usize) -> impl Iterator<Item = usize> {
    (0..len).step_by(stride.max(1))
}

/// `S = 1 - f(I')` for each patch position, painted over the patch; pixels
/// covered by several patches get the mean of their scores.
pub fn occlusion_sensitivity(model: &dyn BlackBoxModel, image: &Image, params: &OcclusionParams) -> Result<SaliencyMap> {
    let (h, w, _) = image.shape();
    let (patch, stride) = (params.patch, params.stride());
    if patch == 0 || patch > h.min(w) {
        return Err(Error::arg(format!("patch {patch} must lie in 1..={}", h.min(w))));
    }
    if stride == 0 || stride > patch {
        return Err(Error::arg(format!("stride {stride} must lie in 1..={patch}")));
    }
    let class = params.target.resolve(model, image)?;
    let mut sum = vec![0.0; h * w];
    let mut count = vec![0u32; h * w];
    for top in occlusion_anchors(h, stride) {
        for left in occlusion_anchors(w, stride) {
            let occluded = occlude_patch(image, top as isize, left as isize, patch, patch, params.color)?;
            let score = 1.0 - class_probability(&model.predict(&occluded)?, class)?;
            for y in top..(top + patch).min(h) {
                for x in left..(left + patch).min(w) {
                    sum[y * w + x] += score;
                    count[y * w + x] += 1;
                }
            }
        }
    }
    let values = sum.into_iter().zip(count).map(|(s, n)| s / n as f64).collect();
    SaliencyMap::new(h, w, values)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::explain::testing::{random_image, Counting};
    use crate::model::{build_constant_model, build_dqn_toy, build_planted_model};
    use crate::perturb::BLACK;
    use crate::rng::RngStream;
    use crate::tensor::Rect;

    #[test]
    fn constant_model_gives_one_minus_c() {
        let model = Counting::new(build_constant_model(&[0.7, 0.3]).unwrap());
        let img = random_image(23, 17, 2, 3);
        let map = occlusion_sensitivity(&model, &img, &OcclusionParams::default()).unwrap();
        assert!(map.values().iter().all(|&v| v == 1.0 - 0.7));
        // 5 x 4 anchors plus the reference query for the argmax class
        assert_eq!(model.calls(), 5 * 4 + 1);
        let fixed = Counting::new(build_constant_model(&[0.7, 0.3]).unwrap());
        let params = OcclusionParams { target: Target::Class(1), stride: Some(2), ..OcclusionParams::default() };
        let map = occlusion_sensitivity(&fixed, &img, &params).unwrap();
        assert_eq!(fixed.calls(), 12 * 9);
        assert!(map.values().iter().all(|&v| (v - 0.7).abs() < 1e-15));
    }

    /// Brute-force reference: visits anchors column-major in reverse and
    /// assigns each pixel the score of the patch covering it.
    fn brute_force(model: &dyn BlackBoxModel, image: &Image, patch: usize, color: f32) -> Vec<f64> {
        let (h, w, c) = image.shape();
        let class = model.predict(image).unwrap().predicted_index;
        let mut out = vec![f64::NAN; h * w];
        let anchors = |len: usize| (0..len.div_ceil(patch)).map(move |i| i * patch).rev();
        for left in anchors(w) {
            for top in anchors(h) {
                let mut data = image.data().to_vec();
                for y in top..(top + patch).min(h) {
                    for x in left..(left + patch).min(w) {
                        data[(y * w + x) * c..(y * w + x + 1) * c].fill(color);
                    }
                }
                let occluded = Image::new(h, w, c, data).unwrap();
                let score = 1.0 - model.predict(&occluded).unwrap().probabilities[class];
                for y in top..(top + patch).min(h) {
                    for x in left..(left + patch).min(w) {
                        out[y * w + x] = score;
                    }
                }
            }
        }
        out
    }

    #[test]
    fn dqn_matches_brute_force_bit_for_bit() {
        let model = build_dqn_toy(4, &mut RngStream::new(11)).unwrap();
        let img = random_image(84, 84, 4, 5);
        let params = OcclusionParams { color: BLACK, ..OcclusionParams::default() };
        let map = occlusion_sensitivity(&model, &img, &params).unwrap();
        assert_eq!(map.values(), &brute_force(&model, &img, 5, BLACK)[..]);
    }

    #[test]
    fn planted_far_pixels_score_reference() {
        let region = Rect::new(10, 12, 8, 9);
        let model = build_planted_model(region, (32, 32, 1), 3, &mut RngStream::new(2)).unwrap();
        let img = random_image(32, 32, 1, 9);
        let f = model.predict(&img).unwrap().confidence();
        let params = OcclusionParams { color: BLACK, ..OcclusionParams::default() };
        let map = occlusion_sensitivity(&model, &img, &params).unwrap();
        let patch = 5isize;
        for y in 0..32 {
            for x in 0..32 {
                let dy = (region.top as isize - y as isize).max(y as isize - region.bottom() as isize + 1);
                let dx = (region.left as isize - x as isize).max(x as isize - region.right() as isize + 1);
                if dy.max(dx) >= patch {
                    assert_eq!(map.get(y, x), 1.0 - f);
                }
            }
        }
        let inside = |y: usize, x: usize| region.contains(y, x);
        let (mut s_in, mut n_in, mut s_out, mut n_out) = (0.0, 0, 0.0, 0);
        for y in 0..32 {
            for x in 0..32 {
                if inside(y, x) {
                    s_in += map.get(y, x);
                    n_in += 1;
                } else {
                    s_out += map.get(y, x);
                    n_out += 1;
                }
            }
        }
        assert!(s_in / n_in as f64 > s_out / n_out as f64);
    }

    #[test]
    fn overlapping_patches_average() {
        // f depends on pixel (0, 0) only through a planted 1x1 region
        let model = build_planted_model(Rect::new(0, 0, 1, 1), (4, 4, 1), 2, &mut RngStream::new(1)).unwrap();
        let img = Image::filled(4, 4, 1, 0.9).unwrap();
        let params = OcclusionParams { patch: 2, stride: Some(1), color: BLACK, target: Target::Class(0) };
        let map = occlusion_sensitivity(&model, &img, &params).unwrap();
        let hit = 1.0 - model.predict(&Image::from_fn(4, 4, 1, |y, x, _| if y + x == 0 { 0.0 } else { 0.9 }).unwrap())
            .unwrap()
            .probabilities[0];
        let miss = 1.0 - model.predict(&img).unwrap().probabilities[0];
        // pixel (1, 1) is covered by anchors (0,0), (0,1), (1,0), (1,1)
        assert!((map.get(1, 1) - (hit + 3.0 * miss) / 4.0).abs() < 1e-12);
        assert!((map.get(0, 0) - hit).abs() < 1e-12);
        assert!((map.get(3, 3) - miss).abs() < 1e-12);
    }

    #[test]
    fn invalid_parameters() {
        let model = build_constant_model(&[0.5, 0.5]).unwrap();
        let img = random_image(4, 6, 1, 0);
        let bad = [
            OcclusionParams { patch: 5, ..OcclusionParams::default() },
            OcclusionParams { patch: 0, ..OcclusionParams::default() },
            OcclusionParams { patch: 2, stride: Some(3), ..OcclusionParams::default() },
            OcclusionParams { patch: 2, target: Target::Class(2), ..OcclusionParams::default() },
        ];
        for p in bad {
            assert!(occlusion_sensitivity(&model, &img, &p).is_err(), "{p:?}");
        }
    }
}
