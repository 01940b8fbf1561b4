use super::{BBox, Point, Polygon};
use crate::error::{Error, Result};
use crate::scalar::Scalar;

fn check_init<T: Scalar>(bbox: &BBox<T>, k: usize) -> Result<()> {
    if k < 3 {
        return Err(Error::BadVertexCount(k));
    }
    if !bbox.has_positive_area() {
        return Err(Error::DegenerateBox);
    }
    Ok(())
}

/// `k` vertices on the ellipse inscribed in `bbox`, at angles `2πj/k`.
pub fn init_ellipse<T: Scalar>(bbox: &BBox<T>, k: usize) -> Result<Polygon<T>> {
    check_init(bbox, k)?;
    let c = bbox.center();
    let half = T::lit(0.5);
    let (a, b) = (bbox.width() * half, bbox.height() * half);
    let kf = T::from_usize_lossy(k);
    let verts = (0..k)
        .map(|j| {
            let theta = T::TAU() * T::from_usize_lossy(j) / kf;
            // Snap the axis-aligned samples so the extremes land exactly on
            // the box sides.
            let (s, co) = match (4 * j) % k {
                0 => match (4 * j) / k {
                    0 => (T::zero(), T::one()),
                    1 => (T::one(), T::zero()),
                    2 => (T::zero(), -T::one()),
                    _ => (-T::one(), T::zero()),
                },
                _ => theta.sin_cos(),
            };
            Point::new(c.x + a * co, c.y + b * s)
        })
        .collect();
    Polygon::new(verts)
}

/// `k` vertices equally spaced by arc length along the box perimeter,
/// starting at the midpoint of the right side and running in the same
/// angular direction as [`init_ellipse`].
pub fn init_square<T: Scalar>(bbox: &BBox<T>, k: usize) -> Result<Polygon<T>> {
    check_init(bbox, k)?;
    let (w, h) = (bbox.width(), bbox.height());
    let c = bbox.center();
    let corners = Polygon::from_xy(&[
        (bbox.x2, c.y),
        (bbox.x2, bbox.y2),
        (bbox.x1, bbox.y2),
        (bbox.x1, bbox.y1),
        (bbox.x2, bbox.y1),
    ])?;
    let perimeter = (w + h) * T::lit(2.0);
    Ok(walk_closed(&corners, perimeter, k))
}

/// `k` points equally spaced by arc length along the closed contour,
/// starting at vertex 0.
pub fn resample_uniform<T: Scalar>(poly: &Polygon<T>, k: usize) -> Result<Polygon<T>> {
    if k < 3 {
        return Err(Error::BadVertexCount(k));
    }
    let perimeter = poly.perimeter();
    if !(perimeter > T::zero()) {
        return Err(Error::ZeroPerimeter);
    }
    Ok(walk_closed(poly, perimeter, k))
}

fn walk_closed<T: Scalar>(poly: &Polygon<T>, perimeter: T, k: usize) -> Polygon<T> {
    let n = poly.len();
    let spacing = perimeter / T::from_usize_lossy(k);
    let mut out = Vec::with_capacity(k);
    let mut seg = 0;
    let mut seg_start = T::zero();
    let (mut a, mut b) = poly.segment(0);
    let mut seg_len = b.sub(a).norm();
    for j in 0..k {
        let target = spacing * T::from_usize_lossy(j);
        while seg + 1 < n && target >= seg_start + seg_len {
            seg_start = seg_start + seg_len;
            seg += 1;
            (a, b) = poly.segment(seg);
            seg_len = b.sub(a).norm();
        }
        let t = if seg_len > T::zero() {
            ((target - seg_start) / seg_len).min(T::one())
        } else {
            T::zero()
        };
        out.push(Point::new(a.x + t * (b.x - a.x), a.y + t * (b.y - a.y)));
    }
    Polygon::new(out).expect("resampled vertices are finite and k >= 3")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::polygeom::bbox_of;

    fn bx(x1: f64, y1: f64, x2: f64, y2: f64) -> BBox<f64> {
        BBox::new(x1, y1, x2, y2).unwrap()
    }

    #[test]
    fn ellipse_four_vertices_on_circle() {
        let p = init_ellipse(&bx(0.0, 0.0, 2.0, 2.0), 4).unwrap();
        let want = [(2.0, 1.0), (1.0, 2.0), (0.0, 1.0), (1.0, 0.0)];
        for (v, w) in p.vertices().iter().zip(want) {
            assert_eq!((v.x, v.y), w);
        }
        assert!(p.signed_area() > 0.0);
    }

    #[test]
    fn ellipse_area_matches_inscribed_polygon_formula() {
        let k = 64;
        let p = init_ellipse(&bx(0.0, 0.0, 10.0, 6.0), k).unwrap();
        let kf = k as f64;
        let expected = 5.0 * 3.0 * kf / 2.0 * (std::f64::consts::TAU / kf).sin();
        assert!((p.signed_area() - expected).abs() < 1e-9);
        assert!(
            (p.signed_area() - std::f64::consts::PI * 15.0).abs() / (std::f64::consts::PI * 15.0)
                < 2e-3
        );
    }

    #[test]
    fn ellipse_bbox_within_discretization_error() {
        for k in [64, 30, 7] {
            let b = bx(0.0, 0.0, 10.0, 6.0);
            let e = bbox_of(&init_ellipse(&b, k).unwrap()).bbox;
            let tol = (1.0 - (std::f64::consts::PI / k as f64).cos()) * 5.0 + 1e-12;
            for (got, want) in e.as_array().iter().zip(b.as_array()) {
                assert!((got - want).abs() <= tol, "k={k} {got} vs {want}");
            }
        }
    }

    #[test]
    fn ellipse_rejects_degenerate_input() {
        assert_eq!(
            init_ellipse(&bx(0.0, 0.0, 0.0, 5.0), 8).unwrap_err(),
            Error::DegenerateBox
        );
        assert_eq!(
            init_ellipse(&bx(0.0, 0.0, 1.0, 5.0), 2).unwrap_err(),
            Error::BadVertexCount(2)
        );
        assert_eq!(
            init_square(&bx(0.0, 0.0, 3.0, 0.0), 8).unwrap_err(),
            Error::DegenerateBox
        );
    }

    #[test]
    fn square_four_vertices_at_side_midpoints() {
        let p = init_square(&bx(0.0, 0.0, 4.0, 4.0), 4).unwrap();
        let want = [(4.0, 2.0), (2.0, 4.0), (0.0, 2.0), (2.0, 0.0)];
        for (v, w) in p.vertices().iter().zip(want) {
            assert!(
                (v.x - w.0).abs() < 1e-12 && (v.y - w.1).abs() < 1e-12,
                "{v:?} vs {w:?}"
            );
        }
    }

    #[test]
    fn square_spacing_is_uniform() {
        let b = bx(1.0, 2.0, 9.0, 5.0);
        let k = 22;
        let p = init_square(&b, k).unwrap();
        let gap = 2.0 * (b.width() + b.height()) / k as f64;
        // Walk the box boundary parameterization and compare arc positions.
        let arc = |q: Point<f64>| -> f64 {
            let (w, h) = (b.width(), b.height());
            let cy = 3.5;
            if q.x == b.x2 && q.y >= cy {
                q.y - cy
            } else if q.y == b.y2 {
                h / 2.0 + (b.x2 - q.x)
            } else if q.x == b.x1 {
                h / 2.0 + w + (b.y2 - q.y)
            } else if q.y == b.y1 {
                1.5 * h + w + (q.x - b.x1)
            } else {
                1.5 * h + 2.0 * w + (q.y - b.y1)
            }
        };
        for (j, v) in p.vertices().iter().enumerate() {
            assert!((arc(*v) - gap * j as f64).abs() < 1e-9, "vertex {j}: {v:?}");
        }
    }

    #[test]
    fn resample_square_keeps_perimeter_and_area() {
        let sq =
            Polygon::<f64>::from_xy(&[(0.0, 0.0), (1.0, 0.0), (1.0, 1.0), (0.0, 1.0)]).unwrap();
        let r = resample_uniform(&sq, 8).unwrap();
        assert!((r.perimeter() - 4.0).abs() < 1e-12);
        assert!((r.signed_area() - 1.0).abs() < 1e-12);
        assert_eq!(r.vertices()[0], sq.vertices()[0]);
        let rr = resample_uniform(&r, 8).unwrap();
        for (a, b) in r.vertices().iter().zip(rr.vertices()) {
            assert!((a.x - b.x).abs() < 1e-9 && (a.y - b.y).abs() < 1e-9);
        }
    }

    #[test]
    fn resample_rejects_zero_perimeter() {
        let p = Polygon::<f64>::from_xy(&[(1.0, 1.0); 4]).unwrap();
        assert_eq!(resample_uniform(&p, 8).unwrap_err(), Error::ZeroPerimeter);
    }
}
