//! Clip window anchored to the ground-truth box.
//!
//! The box is mapped onto the central `grid x grid` square of an `S x S`
//! frame (`S = grid + 2 * pad`); the image is resampled bilinearly at the
//! frame's pixel centers, and the pad ring carries real (edge-clamped)
//! image content.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::image::ImagePatch;
use crate::polygeom::{BBox, Point, Polygon};
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClipConfig {
    pub grid: usize,
    pub pad: usize,
}

impl Default for ClipConfig {
    fn default() -> Self {
        Self { grid: 64, pad: 4 }
    }
}

impl ClipConfig {
    /// Side length of the clip window.
    pub fn size(&self) -> usize {
        self.grid + 2 * self.pad
    }

    pub fn validate(&self) -> Result<()> {
        if self.grid < 8 {
            return Err(Error::Config(format!(
                "clip grid must be >= 8, got {}",
                self.grid
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct ClipFrame<T> {
    scale: [T; 2],
    /// Image-frame coordinate that maps to grid coordinate `pad`.
    origin: [T; 2],
    pad: T,
    patch: ImagePatch<T>,
}

impl<T: Scalar> ClipFrame<T> {
    /// Affine-only frame (no image resampling); used where only the
    /// coordinate map is needed.
    fn affine(gt: &BBox<T>, cfg: &ClipConfig) -> Result<(T, T, T)> {
        cfg.validate()?;
        if !gt.has_positive_area() {
            return Err(Error::DegenerateBox);
        }
        let g = T::from_usize_lossy(cfg.grid);
        Ok((
            g / gt.width(),
            g / gt.height(),
            T::from_usize_lossy(cfg.pad),
        ))
    }

    #[inline]
    pub fn scale(&self) -> [T; 2] {
        self.scale
    }

    #[inline]
    pub fn patch(&self) -> &ImagePatch<T> {
        &self.patch
    }

    #[inline]
    pub fn point_to_grid(&self, p: Point<T>) -> Point<T> {
        Point::new(
            (p.x - self.origin[0]) * self.scale[0] + self.pad,
            (p.y - self.origin[1]) * self.scale[1] + self.pad,
        )
    }

    #[inline]
    pub fn point_from_grid(&self, p: Point<T>) -> Point<T> {
        Point::new(
            (p.x - self.pad) / self.scale[0] + self.origin[0],
            (p.y - self.pad) / self.scale[1] + self.origin[1],
        )
    }

    pub fn to_grid(&self, poly: &Polygon<T>) -> Polygon<T> {
        poly.map(|p| self.point_to_grid(p))
            .expect("affine image of a valid polygon")
    }

    pub fn from_grid(&self, poly: &Polygon<T>) -> Polygon<T> {
        poly.map(|p| self.point_from_grid(p))
            .expect("affine image of a valid polygon")
    }

    /// Image-frame box covered by the whole clip window.
    pub fn window(&self) -> BBox<T> {
        let s = T::from_usize_lossy(self.patch.width());
        let a = self.point_from_grid(Point::new(T::zero(), T::zero()));
        let b = self.point_from_grid(Point::new(s, s));
        BBox {
            x1: a.x,
            y1: a.y,
            x2: b.x,
            y2: b.y,
        }
    }

    /// Converts a flat gradient w.r.t. grid coordinates into one w.r.t.
    /// image coordinates.
    pub fn chain_gradient(&self, grad_grid: &[T]) -> Vec<T> {
        grad_grid
            .chunks_exact(2)
            .flat_map(|g| [g[0] * self.scale[0], g[1] * self.scale[1]])
            .collect()
    }

    /// Inverse of [`ClipFrame::chain_gradient`].
    pub fn gradient_to_grid(&self, grad_image: &[T]) -> Vec<T> {
        grad_image
            .chunks_exact(2)
            .flat_map(|g| [g[0] / self.scale[0], g[1] / self.scale[1]])
            .collect()
    }

    /// Converts a flat displacement expressed in grid pixels into image pixels.
    pub fn displacement_from_grid(&self, d_grid: &[T]) -> Vec<T> {
        self.gradient_to_grid(d_grid)
    }
}

/// Builds the clip frame for `gt` and resamples `img` into it.
pub fn make_clip_frame<T: Scalar>(
    gt: &BBox<T>,
    img: &ImagePatch<T>,
    cfg: &ClipConfig,
) -> Result<ClipFrame<T>> {
    let (sx, sy, pad) = ClipFrame::affine(gt, cfg)?;
    let s = cfg.size();
    let mut frame = ClipFrame {
        scale: [sx, sy],
        origin: [gt.x1, gt.y1],
        pad,
        patch: ImagePatch::constant(1, 1, [T::zero(); 3]),
    };
    let half = T::lit(0.5);
    let patch = ImagePatch::from_fn(s, s, |col, row| {
        let c = Point::new(
            T::from_usize_lossy(col) + half,
            T::from_usize_lossy(row) + half,
        );
        let p = frame.point_from_grid(c);
        img.sample_bilinear(p.x, p.y)
    });
    frame.patch = patch;
    Ok(frame)
}
