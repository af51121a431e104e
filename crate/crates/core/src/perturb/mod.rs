//! Image perturbation primitives. Every function returns a fresh image and
//! leaves its input untouched.

mod blur;
mod occlusion;
mod rise;
mod segmentation;

pub use blur::{blur_circle, composite_disc, gaussian_blur};
pub use occlusion::{occlude_circle, occlude_patch};
pub use rise::{generate_rise_masks, Mask, RiseMaskSampler};
pub use segmentation::{delete_superpixels, quickshift_segment, QuickshiftParams, Segmentation};

/// Grey: half of the maximum intensity.
pub const GREY: f32 = 0.5;
pub const BLACK: f32 = 0.0;
