//! Perturbation-based saliency maps for black-box image models.
//!
//! * [`model`]: the black-box contract, a small inference engine and oracle models.
//! * [`perturb`]: occlusion, blur, random masks and superpixels.
//! * [`explain`]: occlusion sensitivity, noise sensitivity, RISE and LIME.
//! * [`evaluate`]: insertion curves, parameter-randomization sanity checks,
//!   similarity metrics and runtime measurement.

pub mod error;
pub mod evaluate;
pub mod explain;
pub mod interp;
pub mod io;
pub mod model;
pub mod perturb;
pub mod rng;
pub mod tensor;

pub use error::{Error, Result};
pub use interp::{bilinear_upsample, normalize_map};
pub use rng::RngStream;
pub use tensor::{Image, Rect, SaliencyMap};
