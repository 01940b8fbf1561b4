//! Binary masks from polygons and mask overlap.

use crate::polygeom::{point_in_polygon, Point, Polygon};
use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Mask {
    width: usize,
    height: usize,
    data: Vec<bool>,
}

impl Mask {
    pub fn new(width: usize, height: usize, data: Vec<bool>) -> Self {
        assert_eq!(data.len(), width * height, "mask data length");
        Self {
            width,
            height,
            data,
        }
    }

    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> bool) -> Self {
        let data = (0..height)
            .flat_map(|r| (0..width).map(move |c| (c, r)))
            .map(|(c, r)| f(c, r))
            .collect();
        Self {
            width,
            height,
            data,
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn get(&self, col: usize, row: usize) -> bool {
        self.data[row * self.width + col]
    }

    pub fn data(&self) -> &[bool] {
        &self.data
    }

    pub fn count(&self) -> usize {
        self.data.iter().filter(|&&b| b).count()
    }

    /// Intersection over union; two empty masks score 0.
    pub fn iou(&self, other: &Mask) -> f64 {
        assert_eq!(
            (self.width, self.height),
            (other.width, other.height),
            "mask shapes differ"
        );
        let (mut inter, mut union) = (0usize, 0usize);
        for (&a, &b) in self.data.iter().zip(&other.data) {
            inter += (a && b) as usize;
            union += (a || b) as usize;
        }
        if union == 0 {
            0.0
        } else {
            inter as f64 / union as f64
        }
    }
}

/// Sets pixel `(col, row)` iff its center is inside the polygon.
pub fn rasterize_polygon<T: Scalar>(poly: &Polygon<T>, height: usize, width: usize) -> Mask {
    let half = T::lit(0.5);
    Mask::from_fn(width, height, |c, r| {
        point_in_polygon(
            poly,
            Point::new(T::from_usize_lossy(c) + half, T::from_usize_lossy(r) + half),
        )
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn square_fills_grid() {
        let sq =
            Polygon::<f64>::from_xy(&[(0.0, 0.0), (4.0, 0.0), (4.0, 4.0), (0.0, 4.0)]).unwrap();
        let m = rasterize_polygon(&sq, 4, 4);
        assert_eq!(m.count(), 16);
        assert_eq!(m.iou(&m), 1.0);
    }

    #[test]
    fn disjoint_masks_score_zero() {
        let a = Mask::from_fn(4, 4, |c, _| c < 2);
        let b = Mask::from_fn(4, 4, |c, _| c >= 2);
        assert_eq!(a.iou(&b), 0.0);
        assert_eq!(
            Mask::from_fn(2, 2, |_, _| false).iou(&Mask::from_fn(2, 2, |_, _| false)),
            0.0
        );
    }

    #[test]
    fn matches_point_in_polygon_per_pixel() {
        let poly =
            Polygon::<f64>::from_xy(&[(0.5, 1.5), (7.5, 0.5), (3.0, 3.5), (7.0, 6.5), (1.0, 6.0)])
                .unwrap();
        let m = rasterize_polygon(&poly, 7, 8);
        for r in 0..7 {
            for c in 0..8 {
                let p = Point::new(c as f64 + 0.5, r as f64 + 0.5);
                assert_eq!(m.get(c, r), point_in_polygon(&poly, p));
            }
        }
    }
}
