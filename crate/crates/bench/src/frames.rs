//! Deterministic synthetic input frames.

use std::str::FromStr;

use serde::{Deserialize, Serialize};

use saliency_core::model::MazeLayout;
use saliency_core::{Image, Rect, RngStream};

use crate::config::DEFAULT_REGION;
use crate::error::{BenchError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FrameKind {
    /// Bright rectangle (>= 0.8) on a dark background (<= 0.2).
    PlantedRect,
    /// Grey (0.5) maze walls, black corridors, bright moving objects.
    GreyMaze,
    /// Two-level checkerboard with a random phase.
    Checker,
    /// Uniform noise in `[0, 1)`.
    Noise,
}

impl FromStr for FrameKind {
    type Err = saliency_core::Error;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "planted-rect" => Ok(FrameKind::PlantedRect),
            "grey-maze" => Ok(FrameKind::GreyMaze),
            "checker" => Ok(FrameKind::Checker),
            "noise" => Ok(FrameKind::Noise),
            other => Err(saliency_core::Error::Argument(format!(
                "unknown frame generator {other:?} (expected planted-rect, grey-maze, checker or noise)"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FrameSpec {
    pub generator: FrameKind,
    pub count: usize,
    pub seed: Option<u64>,
    pub height: usize,
    pub width: usize,
    pub channels: usize,
    /// planted-rect: the bright rectangle.
    pub region: Rect,
    /// grey-maze: layout period and corridor width.
    pub period: usize,
    pub corridor: usize,
    /// grey-maze: number of 3x3 bright objects.
    pub objects: usize,
    /// checker: cell side length.
    pub cell: usize,
}

impl Default for FrameSpec {
    fn default() -> Self {
        Self {
            generator: FrameKind::PlantedRect,
            count: 4,
            seed: None,
            height: 84,
            width: 84,
            channels: 4,
            region: DEFAULT_REGION,
            period: 14,
            corridor: 5,
            objects: 6,
            cell: 7,
        }
    }
}

impl FrameSpec {
    pub fn layout(&self) -> MazeLayout {
        MazeLayout {
            height: self.height,
            width: self.width,
            period: self.period,
            corridor: self.corridor,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad =
            |field: &str, msg: String| Err(BenchError::config(format!("images.{field}"), msg));
        if self.count == 0 {
            return bad("count", "must be >= 1".into());
        }
        if self.height == 0 || self.width == 0 || self.channels == 0 {
            return bad(
                "height",
                format!(
                    "invalid frame shape {}x{}x{}",
                    self.height, self.width, self.channels
                ),
            );
        }
        match self.generator {
            FrameKind::PlantedRect
                if self.region.area() == 0 || !self.region.fits_within(self.height, self.width) =>
            {
                bad(
                    "region",
                    format!(
                        "{:?} does not fit a {}x{} frame",
                        self.region, self.height, self.width
                    ),
                )
            }
            FrameKind::GreyMaze => self
                .layout()
                .validate()
                .map_err(|e| BenchError::config("images.period", e.to_string())),
            FrameKind::Checker if self.cell == 0 => bad("cell", "must be >= 1".into()),
            _ => Ok(()),
        }
    }
}

/// Frames for `spec`; frame `i` draws from child stream `i` of the seed.
pub fn generate(spec: &FrameSpec) -> Result<Vec<Image>> {
    spec.validate()?;
    let root = RngStream::new(spec.seed.unwrap_or(0));
    (0..spec.count)
        .map(|i| frame(spec, &mut root.child(i as u64)))
        .collect()
}

/// Generates `count` frames of the named kind with default parameters.
pub fn generate_frames(kind: &str, seed: u64, count: usize) -> Result<Vec<Image>> {
    let generator = kind.parse()?;
    generate(&FrameSpec {
        generator,
        count,
        seed: Some(seed),
        ..FrameSpec::default()
    })
}

fn frame(spec: &FrameSpec, rng: &mut RngStream) -> Result<Image> {
    let (h, w, c) = (spec.height, spec.width, spec.channels);
    let image = match spec.generator {
        FrameKind::PlantedRect => {
            let region = spec.region;
            Image::from_fn(h, w, c, |y, x, _| {
                let v = 0.2 * rng.next_f64() as f32;
                if region.contains(y, x) {
                    0.8 + v
                } else {
                    v
                }
            })?
        }
        FrameKind::GreyMaze => {
            let layout = spec.layout();
            // objects move one pixel to the right per stacked channel
            let objects: Vec<(usize, usize)> = (0..spec.objects)
                .map(|_| (rng.below(h as u64) as usize, rng.below(w as u64) as usize))
                .collect();
            Image::from_fn(h, w, c, |y, x, ch| {
                if layout.is_wall(y, x) {
                    return MazeLayout::WALL;
                }
                let hit = objects.iter().any(|&(oy, ox)| {
                    let ox = ox + ch;
                    (oy..oy + 3).contains(&y) && (ox..ox + 3).contains(&x)
                });
                if hit {
                    1.0
                } else {
                    0.0
                }
            })?
        }
        FrameKind::Checker => {
            let cell = spec.cell;
            let (oy, ox) = (
                rng.below(cell as u64) as usize,
                rng.below(cell as u64) as usize,
            );
            Image::from_fn(h, w, c, |y, x, _| {
                if ((y + oy) / cell + (x + ox) / cell) % 2 == 0 {
                    0.25
                } else {
                    0.75
                }
            })?
        }
        FrameKind::Noise => Image::from_fn(h, w, c, |_, _, _| rng.next_f64() as f32)?,
    };
    Ok(image)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn planted_rect_levels() {
        for img in generate_frames("planted-rect", 3, 3).unwrap() {
            for y in 0..84 {
                for x in 0..84 {
                    for &v in img.pixel(y, x) {
                        if DEFAULT_REGION.contains(y, x) {
                            assert!((0.8..=1.0).contains(&v));
                        } else {
                            assert!((0.0..=0.2).contains(&v));
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn grey_maze_is_mostly_grey() {
        for img in generate_frames("grey-maze", 1, 4).unwrap() {
            let grey = (0..84 * 84)
                .filter(|&p| img.pixel(p / 84, p % 84).iter().all(|&v| v == 0.5))
                .count();
            assert!(grey as f64 >= 0.3 * (84.0 * 84.0), "{grey}");
            assert!(img.data().iter().any(|&v| v == 1.0));
        }
    }

    #[test]
    fn deterministic_per_seed() {
        for kind in ["planted-rect", "grey-maze", "checker", "noise"] {
            let a = generate_frames(kind, 7, 2).unwrap();
            assert_eq!(a, generate_frames(kind, 7, 2).unwrap(), "{kind}");
            assert_eq!(a[0].shape(), (84, 84, 4));
            if kind != "checker" {
                assert_ne!(a, generate_frames(kind, 8, 2).unwrap(), "{kind}");
            }
        }
    }

    #[test]
    fn unknown_kind_is_an_argument_error() {
        let e = generate_frames("starfield", 0, 1).unwrap_err();
        assert!(
            matches!(e, BenchError::Core(saliency_core::Error::Argument(_))),
            "{e}"
        );
        assert_eq!(e.exit_code(), 3);
    }
}
