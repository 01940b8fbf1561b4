use super::{Point, Polygon};
use crate::scalar::Scalar;

/// Even-odd containment. Points lying exactly on an edge count as inside.
pub fn point_in_polygon<T: Scalar>(poly: &Polygon<T>, p: Point<T>) -> bool {
    let v = poly.vertices();
    let k = v.len();
    let mut inside = false;
    let mut j = k - 1;
    for i in 0..k {
        let (a, b) = (v[j], v[i]);
        if on_segment(a, b, p) {
            return true;
        }
        if (a.y > p.y) != (b.y > p.y) {
            let x_cross = a.x + (b.x - a.x) * (p.y - a.y) / (b.y - a.y);
            if p.x < x_cross {
                inside = !inside;
            }
        }
        j = i;
    }
    inside
}

#[inline]
fn on_segment<T: Scalar>(a: Point<T>, b: Point<T>, p: Point<T>) -> bool {
    let ab = b.sub(a);
    let ap = p.sub(a);
    if ab.cross(ap) != T::zero() {
        return false;
    }
    p.x >= a.x.min(b.x) && p.x <= a.x.max(b.x) && p.y >= a.y.min(b.y) && p.y <= a.y.max(b.y)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit_square() -> Polygon<f64> {
        Polygon::<f64>::from_xy(&[(0.0, 0.0), (1.0, 0.0), (1.0, 1.0), (0.0, 1.0)]).unwrap()
    }

    #[test]
    fn square_inside_outside() {
        let sq = unit_square();
        assert!(point_in_polygon(&sq, Point::new(0.5, 0.5)));
        assert!(!point_in_polygon(&sq, Point::new(2.0, 2.0)));
        assert!(!point_in_polygon(&sq, Point::new(-0.1, 0.5)));
    }

    #[test]
    fn edges_and_corners_are_inside() {
        let sq = unit_square();
        for p in [
            (0.0, 0.5),
            (1.0, 0.5),
            (0.5, 0.0),
            (0.5, 1.0),
            (0.0, 0.0),
            (1.0, 1.0),
        ] {
            assert!(point_in_polygon(&sq, Point::new(p.0, p.1)), "{p:?}");
        }
    }

    #[test]
    fn bowtie_center_is_outside_under_even_odd() {
        let bowtie =
            Polygon::<f64>::from_xy(&[(0.0, 0.0), (2.0, 2.0), (2.0, 0.0), (0.0, 2.0)]).unwrap();
        // (1,1) is the self-intersection and lies on two edges.
        assert!(point_in_polygon(&bowtie, Point::new(1.0, 1.0)));
        assert!(!point_in_polygon(&bowtie, Point::new(1.0, 1.2)));
        assert!(!point_in_polygon(&bowtie, Point::new(1.0, 0.8)));
        assert!(point_in_polygon(&bowtie, Point::new(0.3, 1.0)));
        assert!(point_in_polygon(&bowtie, Point::new(1.7, 1.0)));
    }
}
