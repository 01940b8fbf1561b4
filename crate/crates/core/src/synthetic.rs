//! Synthetic scenes with known masks: bright shapes on a dark, noisy
//! background.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::image::{ImagePatch, Rgb};
use crate::polygeom::{BBox, Point};
use crate::raster::Mask;

pub const FOREGROUND: Rgb<f64> = [0.85, 0.8, 0.75];
pub const BACKGROUND: Rgb<f64> = [0.1, 0.12, 0.15];

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Shape {
    Disk {
        center: Point<f64>,
        radius: f64,
    },
    /// Square of side `2 * half_side` rotated by `angle` radians.
    RotatedSquare {
        center: Point<f64>,
        half_side: f64,
        angle: f64,
    },
    /// Star-convex blob `r(θ) = radius * (1 + amplitude * cos(lobes * θ + phase))`.
    StarBlob {
        center: Point<f64>,
        radius: f64,
        amplitude: f64,
        lobes: u32,
        phase: f64,
    },
}

impl Shape {
    pub fn contains(&self, p: Point<f64>) -> bool {
        match *self {
            Shape::Disk { center, radius } => p.sub(center).norm() <= radius,
            Shape::RotatedSquare {
                center,
                half_side,
                angle,
            } => {
                let d = p.sub(center);
                let (s, c) = angle.sin_cos();
                let u = c * d.x + s * d.y;
                let v = -s * d.x + c * d.y;
                u.abs() <= half_side && v.abs() <= half_side
            }
            Shape::StarBlob { center, .. } => {
                let d = p.sub(center);
                d.norm() <= self.star_radius(d.y.atan2(d.x))
            }
        }
    }

    fn star_radius(&self, theta: f64) -> f64 {
        match *self {
            Shape::StarBlob {
                radius,
                amplitude,
                lobes,
                phase,
                ..
            } => radius * (1.0 + amplitude * (lobes as f64 * theta + phase).cos()),
            _ => unreachable!("star radius of a non-star shape"),
        }
    }

    /// Tight axis-aligned box of the continuous shape.
    pub fn bbox(&self) -> BBox<f64> {
        let pts: Vec<Point<f64>> = match *self {
            Shape::Disk { center, radius } => {
                return BBox::new(
                    center.x - radius,
                    center.y - radius,
                    center.x + radius,
                    center.y + radius,
                )
                .expect("finite disk");
            }
            Shape::RotatedSquare {
                center,
                half_side,
                angle,
            } => {
                let (s, c) = angle.sin_cos();
                [(1.0, 1.0), (-1.0, 1.0), (-1.0, -1.0), (1.0, -1.0)]
                    .iter()
                    .map(|&(a, b)| {
                        let (u, v) = (a * half_side, b * half_side);
                        Point::new(center.x + c * u - s * v, center.y + s * u + c * v)
                    })
                    .collect()
            }
            Shape::StarBlob { center, .. } => (0..100_000)
                .map(|i| {
                    let t = std::f64::consts::TAU * i as f64 / 100_000.0;
                    let r = self.star_radius(t);
                    Point::new(center.x + r * t.cos(), center.y + r * t.sin())
                })
                .collect(),
        };
        let fold = |f: fn(f64, f64) -> f64, init: f64, g: fn(&Point<f64>) -> f64| {
            pts.iter().map(g).fold(init, f)
        };
        BBox::new(
            fold(f64::min, f64::INFINITY, |p| p.x),
            fold(f64::min, f64::INFINITY, |p| p.y),
            fold(f64::max, f64::NEG_INFINITY, |p| p.x),
            fold(f64::max, f64::NEG_INFINITY, |p| p.y),
        )
        .expect("finite shape")
    }

    /// Pixel-center mask of the shape.
    pub fn mask(&self, width: usize, height: usize) -> Mask {
        Mask::from_fn(width, height, |c, r| {
            self.contains(Point::new(c as f64 + 0.5, r as f64 + 0.5))
        })
    }
}

/// Renders `shapes` in [`FOREGROUND`] over [`BACKGROUND`] plus i.i.d.
/// Gaussian noise of standard deviation `noise` per channel.
pub fn render(
    shapes: &[Shape],
    width: usize,
    height: usize,
    noise: f64,
    seed: u64,
) -> ImagePatch<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let normal = Normal::new(0.0, noise.max(0.0)).expect("valid noise level");
    ImagePatch::from_fn(width, height, |c, r| {
        let p = Point::new(c as f64 + 0.5, r as f64 + 0.5);
        let base = if shapes.iter().any(|s| s.contains(p)) {
            FOREGROUND
        } else {
            BACKGROUND
        };
        base.map(|v| {
            v + if noise > 0.0 {
                normal.sample(&mut rng)
            } else {
                0.0
            }
        })
    })
}

/// Uniform noise image in `[0, 1]`.
pub fn noise_image(width: usize, height: usize, seed: u64) -> ImagePatch<f64> {
    use rand::Rng;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    ImagePatch::from_fn(width, height, |_, _| {
        [rng.random(), rng.random(), rng.random()]
    })
}

/// One shape in its own image, with the box and the reference mask.
#[derive(Debug, Clone)]
pub struct Scene {
    pub name: &'static str,
    pub shape: Shape,
    pub image: ImagePatch<f64>,
    pub gt: BBox<f64>,
    pub mask: Mask,
}

impl Scene {
    pub fn new(name: &'static str, shape: Shape, size: usize, noise: f64, seed: u64) -> Self {
        Self {
            name,
            shape,
            image: render(&[shape], size, size, noise, seed),
            gt: shape.bbox(),
            mask: shape.mask(size, size),
        }
    }
}

/// Disk, rotated square and star-convex blob, each centered in a 96x96
/// image with noise `sigma = 0.02`.
pub fn boundary_suite(seed: u64) -> Vec<Scene> {
    let size = 96;
    let center = Point::new(48.0, 48.0);
    vec![
        Scene::new(
            "disk",
            Shape::Disk {
                center,
                radius: 24.0,
            },
            size,
            0.02,
            seed,
        ),
        Scene::new(
            "rotated_square",
            Shape::RotatedSquare {
                center,
                half_side: 19.0,
                angle: 30f64.to_radians(),
            },
            size,
            0.02,
            seed.wrapping_add(1),
        ),
        Scene::new(
            "star_blob",
            Shape::StarBlob {
                center,
                radius: 24.0,
                amplitude: 0.25,
                lobes: 5,
                phase: 0.3,
            },
            size,
            0.02,
            seed.wrapping_add(2),
        ),
    ]
}
