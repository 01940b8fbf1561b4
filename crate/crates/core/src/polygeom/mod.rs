//! Polygon representation and the geometric primitives the energy is built on.

mod distance;
mod init;
mod pip;

pub use distance::{
    nearest_segment_distance, segment_distance, SegmentCase, SegmentDistance, SegmentGradient,
};
pub use init::{init_ellipse, init_square, resample_uniform};
pub use pip::point_in_polygon;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Point<T> {
    pub x: T,
    pub y: T,
}

impl<T: Scalar> Point<T> {
    #[inline]
    pub fn new(x: T, y: T) -> Self {
        Self { x, y }
    }

    #[inline]
    pub fn sub(self, o: Self) -> Self {
        Self::new(self.x - o.x, self.y - o.y)
    }

    #[inline]
    pub fn dot(self, o: Self) -> T {
        self.x * o.x + self.y * o.y
    }

    #[inline]
    pub fn cross(self, o: Self) -> T {
        self.x * o.y - self.y * o.x
    }

    #[inline]
    pub fn norm(self) -> T {
        self.x.hypot(self.y)
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }
}

/// Closed contour of `K >= 3` ordered vertices; edge `i` joins vertex `i`
/// and vertex `(i + 1) % K`.
#[derive(Debug, Clone, PartialEq)]
pub struct Polygon<T> {
    vertices: Vec<Point<T>>,
}

impl<T: Scalar> Polygon<T> {
    pub fn new(vertices: Vec<Point<T>>) -> Result<Self> {
        if vertices.len() < 3 {
            return Err(Error::TooFewVertices(vertices.len()));
        }
        if let Some(i) = vertices.iter().position(|p| !p.is_finite()) {
            return Err(Error::NonFiniteVertex(i));
        }
        Ok(Self { vertices })
    }

    pub fn from_xy(coords: &[(T, T)]) -> Result<Self> {
        Self::new(coords.iter().map(|&(x, y)| Point::new(x, y)).collect())
    }

    /// Builds a polygon from `[x0, y0, x1, y1, ...]`.
    pub fn from_flat(flat: &[T]) -> Result<Self> {
        if flat.len() % 2 != 0 {
            return Err(Error::TooFewVertices(flat.len() / 2));
        }
        Self::new(
            flat.chunks_exact(2)
                .map(|c| Point::new(c[0], c[1]))
                .collect(),
        )
    }

    pub fn to_flat(&self) -> Vec<T> {
        self.vertices.iter().flat_map(|p| [p.x, p.y]).collect()
    }

    #[inline]
    pub fn vertices(&self) -> &[Point<T>] {
        &self.vertices
    }

    #[inline]
    #[allow(clippy::len_without_is_empty)]
    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    /// Endpoints of edge `i`.
    #[inline]
    pub fn segment(&self, i: usize) -> (Point<T>, Point<T>) {
        let k = self.vertices.len();
        (self.vertices[i], self.vertices[(i + 1) % k])
    }

    /// Shoelace area, positive for counterclockwise order in a y-up frame
    /// (equivalently, x-axis towards y-axis rotation in image coordinates).
    pub fn signed_area(&self) -> T {
        let k = self.len();
        let twice: T = (0..k)
            .map(|i| {
                let (a, b) = self.segment(i);
                a.cross(b)
            })
            .sum();
        twice * T::lit(0.5)
    }

    pub fn perimeter(&self) -> T {
        (0..self.len())
            .map(|i| {
                let (a, b) = self.segment(i);
                b.sub(a).norm()
            })
            .sum()
    }

    /// Applies `f` to every vertex.
    pub fn map(&self, f: impl Fn(Point<T>) -> Point<T>) -> Result<Self> {
        Self::new(self.vertices.iter().map(|&p| f(p)).collect())
    }

    /// Returns the polygon displaced by `t * direction`, where `direction`
    /// is a flat `2K` vector laid out like [`Polygon::to_flat`].
    pub fn displaced(&self, direction: &[T], t: T) -> Result<Self> {
        assert_eq!(
            direction.len(),
            2 * self.len(),
            "direction length must be 2K"
        );
        Self::new(
            self.vertices
                .iter()
                .zip(direction.chunks_exact(2))
                .map(|(p, d)| Point::new(p.x + t * d[0], p.y + t * d[1]))
                .collect(),
        )
    }
}

/// Axis-aligned box in corner form.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BBox<T> {
    pub x1: T,
    pub y1: T,
    pub x2: T,
    pub y2: T,
}

impl<T: Scalar> BBox<T> {
    pub fn new(x1: T, y1: T, x2: T, y2: T) -> Result<Self> {
        let finite = [x1, y1, x2, y2].iter().all(|v| v.is_finite());
        if !finite || x1 > x2 || y1 > y2 {
            return Err(Error::InvalidBox {
                x1: x1.as_f64(),
                y1: y1.as_f64(),
                x2: x2.as_f64(),
                y2: y2.as_f64(),
            });
        }
        Ok(Self { x1, y1, x2, y2 })
    }

    /// Converts `[x, y, width, height]` into corner form.
    pub fn from_xywh(x: T, y: T, w: T, h: T) -> Result<Self> {
        Self::new(x, y, x + w, y + h)
    }

    #[inline]
    pub fn width(&self) -> T {
        self.x2 - self.x1
    }

    #[inline]
    pub fn height(&self) -> T {
        self.y2 - self.y1
    }

    #[inline]
    pub fn area(&self) -> T {
        self.width() * self.height()
    }

    #[inline]
    pub fn center(&self) -> Point<T> {
        let half = T::lit(0.5);
        Point::new((self.x1 + self.x2) * half, (self.y1 + self.y2) * half)
    }

    pub fn has_positive_area(&self) -> bool {
        self.width() > T::zero() && self.height() > T::zero()
    }

    pub fn as_array(&self) -> [T; 4] {
        [self.x1, self.y1, self.x2, self.y2]
    }

    /// Plain IoU, zero when the union is empty.
    pub fn iou(&self, other: &Self) -> T {
        let iw = (self.x2.min(other.x2) - self.x1.max(other.x1)).max(T::zero());
        let ih = (self.y2.min(other.y2) - self.y1.max(other.y1)).max(T::zero());
        let inter = iw * ih;
        let union = self.area() + other.area() - inter;
        if union > T::zero() {
            inter / union
        } else {
            T::zero()
        }
    }
}

/// Tight box of a polygon together with the vertices that attain each side.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoxExtremes<T> {
    pub bbox: BBox<T>,
    pub min_x: usize,
    pub min_y: usize,
    pub max_x: usize,
    pub max_y: usize,
}

impl<T: Scalar> BoxExtremes<T> {
    /// Routes a gradient w.r.t. `(x1, y1, x2, y2)` onto the flat `2K` vertex
    /// layout, accumulating into `out`.
    pub fn route_gradient(&self, box_grad: [T; 4], out: &mut [T]) {
        out[2 * self.min_x] = out[2 * self.min_x] + box_grad[0];
        out[2 * self.min_y + 1] = out[2 * self.min_y + 1] + box_grad[1];
        out[2 * self.max_x] = out[2 * self.max_x] + box_grad[2];
        out[2 * self.max_y + 1] = out[2 * self.max_y + 1] + box_grad[3];
    }
}

/// Min/max box of the vertices. Ties go to the lowest vertex index.
pub fn bbox_of<T: Scalar>(poly: &Polygon<T>) -> BoxExtremes<T> {
    let v = poly.vertices();
    let (mut min_x, mut min_y, mut max_x, mut max_y) = (0, 0, 0, 0);
    for (i, p) in v.iter().enumerate().skip(1) {
        if p.x < v[min_x].x {
            min_x = i;
        }
        if p.y < v[min_y].y {
            min_y = i;
        }
        if p.x > v[max_x].x {
            max_x = i;
        }
        if p.y > v[max_y].y {
            max_y = i;
        }
    }
    BoxExtremes {
        bbox: BBox {
            x1: v[min_x].x,
            y1: v[min_y].y,
            x2: v[max_x].x,
            y2: v[max_y].y,
        },
        min_x,
        min_y,
        max_x,
        max_y,
    }
}
