use super::{Point, Polygon};
use crate::scalar::Scalar;

/// Where the perpendicular foot of the query point falls relative to a segment.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SegmentCase {
    /// `u <= 0`: closest to the start vertex (also used for zero-length segments).
    Before,
    /// `0 < u < 1`: closest to the perpendicular foot.
    Interior,
    /// `u >= 1`: closest to the end vertex.
    After,
}

/// Sparse derivative of a per-point quantity w.r.t. the four coordinates of
/// one segment: `d = [d/dx_start, d/dy_start, d/dx_end, d/dy_end]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SegmentGradient<T> {
    pub start: usize,
    pub end: usize,
    pub d: [T; 4],
}

impl<T: Scalar> SegmentGradient<T> {
    pub fn zero(start: usize, end: usize) -> Self {
        Self {
            start,
            end,
            d: [T::zero(); 4],
        }
    }

    pub fn scaled(&self, s: T) -> Self {
        Self {
            start: self.start,
            end: self.end,
            d: self.d.map(|v| v * s),
        }
    }

    /// Adds `scale * self` into a flat `2K` gradient.
    #[inline]
    pub fn accumulate(&self, scale: T, out: &mut [T]) {
        let (s, e) = (2 * self.start, 2 * self.end);
        out[s] = out[s] + scale * self.d[0];
        out[s + 1] = out[s + 1] + scale * self.d[1];
        out[e] = out[e] + scale * self.d[2];
        out[e + 1] = out[e + 1] + scale * self.d[3];
    }

    pub fn to_dense(&self, k: usize) -> Vec<T> {
        let mut out = vec![T::zero(); 2 * k];
        self.accumulate(T::one(), &mut out);
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SegmentDistance<T> {
    pub distance: T,
    pub segment: usize,
    /// Projection parameter along the segment; `0` for zero-length segments.
    pub u: T,
    pub case: SegmentCase,
    /// Derivative of `distance` w.r.t. the endpoints of `segment`.
    pub gradient: SegmentGradient<T>,
}

/// Distance from `p` to the closed segment `a`–`b`, with its gradient
/// w.r.t. the endpoints. The gradient is `(1 - u) n` for `a` and `u n` for
/// `b` where `n` is the unit vector from `p` to the closest point, which
/// reduces to the endpoint derivative when `u` is clamped.
pub fn segment_distance<T: Scalar>(
    a: Point<T>,
    b: Point<T>,
    p: Point<T>,
) -> (T, T, SegmentCase, [T; 4]) {
    let d = b.sub(a);
    let len2 = d.dot(d);
    let (u, case, t) = if len2 == T::zero() {
        (T::zero(), SegmentCase::Before, T::zero())
    } else {
        let u = p.sub(a).dot(d) / len2;
        if u <= T::zero() {
            (u, SegmentCase::Before, T::zero())
        } else if u >= T::one() {
            (u, SegmentCase::After, T::one())
        } else {
            (u, SegmentCase::Interior, u)
        }
    };
    let foot = Point::new(a.x + t * d.x, a.y + t * d.y);
    let r = foot.sub(p);
    let dist = r.norm();
    if dist == T::zero() {
        return (dist, u, case, [T::zero(); 4]);
    }
    let (nx, ny) = (r.x / dist, r.y / dist);
    let s = T::one() - t;
    (dist, u, case, [s * nx, s * ny, t * nx, t * ny])
}

#[inline]
fn clamped_sq_distance<T: Scalar>(a: Point<T>, b: Point<T>, p: Point<T>) -> T {
    let d = b.sub(a);
    let ap = p.sub(a);
    let len2 = d.dot(d);
    let t = if len2 > T::zero() {
        (ap.dot(d) / len2).max(T::zero()).min(T::one())
    } else {
        T::zero()
    };
    let rx = ap.x - t * d.x;
    let ry = ap.y - t * d.y;
    rx * rx + ry * ry
}

/// Shortest distance from `p` to the polygon contour. Equidistant segments
/// resolve to the lowest index.
pub fn nearest_segment_distance<T: Scalar>(poly: &Polygon<T>, p: Point<T>) -> SegmentDistance<T> {
    let v = poly.vertices();
    let k = v.len();
    let mut best = 0;
    let mut best_d2 = T::infinity();
    for i in 0..k {
        let d2 = clamped_sq_distance(v[i], v[(i + 1) % k], p);
        if d2 < best_d2 {
            best_d2 = d2;
            best = i;
        }
    }
    let end = (best + 1) % k;
    let (distance, u, case, d) = segment_distance(v[best], v[end], p);
    SegmentDistance {
        distance,
        segment: best,
        u,
        case,
        gradient: SegmentGradient {
            start: best,
            end,
            d,
        },
    }
}
