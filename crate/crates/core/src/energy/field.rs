use crate::polygeom::{
    nearest_segment_distance, point_in_polygon, Point, Polygon, SegmentGradient,
};
use crate::scalar::{sigmoid, Scalar};

/// Relaxed inside/outside membership sampled at the pixel centers of a
/// `width x height` grid.
#[derive(Debug, Clone)]
pub struct MembershipField<T> {
    width: usize,
    height: usize,
    vertex_count: usize,
    values: Vec<T>,
    hard: Vec<bool>,
    distance: Vec<T>,
    grads: Vec<SegmentGradient<T>>,
}

impl<T: Scalar> MembershipField<T> {
    #[inline]
    pub fn width(&self) -> usize {
        self.width
    }

    #[inline]
    pub fn height(&self) -> usize {
        self.height
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.values.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Number of polygon vertices the gradients refer to.
    #[inline]
    pub fn vertex_count(&self) -> usize {
        self.vertex_count
    }

    /// Relaxed values, row-major.
    #[inline]
    pub fn values(&self) -> &[T] {
        &self.values
    }

    /// Hard point-in-polygon labels, row-major.
    #[inline]
    pub fn hard(&self) -> &[bool] {
        &self.hard
    }

    #[inline]
    pub fn distances(&self) -> &[T] {
        &self.distance
    }

    /// Derivative of the relaxed value at pixel `idx` w.r.t. the endpoints of
    /// its nearest segment. Empty when the field was built without gradients.
    #[inline]
    pub fn grad(&self, idx: usize) -> &SegmentGradient<T> {
        &self.grads[idx]
    }

    pub fn has_gradients(&self) -> bool {
        !self.grads.is_empty()
    }

    /// Builds the field; gradients are skipped when `with_grad` is false.
    pub fn build(poly: &Polygon<T>, width: usize, height: usize, tau: T, with_grad: bool) -> Self {
        let n = width * height;
        let mut values = Vec::with_capacity(n);
        let mut hard = Vec::with_capacity(n);
        let mut distance = Vec::with_capacity(n);
        let mut grads = Vec::with_capacity(if with_grad { n } else { 0 });
        let half = T::lit(0.5);
        let inv_tau = T::one() / tau;
        for row in 0..height {
            let y = T::from_usize_lossy(row) + half;
            for col in 0..width {
                let p = Point::new(T::from_usize_lossy(col) + half, y);
                let inside = point_in_polygon(poly, p);
                let nearest = nearest_segment_distance(poly, p);
                let sign = if inside { T::one() } else { -T::one() };
                let z = sign * nearest.distance * inv_tau;
                values.push(sigmoid(z));
                hard.push(inside);
                distance.push(nearest.distance);
                if with_grad {
                    let dsig = sigmoid(z) * sigmoid(-z);
                    grads.push(nearest.gradient.scaled(dsig * sign * inv_tau));
                }
            }
        }
        Self {
            width,
            height,
            vertex_count: poly.len(),
            values,
            hard,
            distance,
            grads,
        }
    }
}

/// Relaxed membership with per-pixel gradients; the hard label is held
/// fixed when differentiating.
pub fn relaxed_field<T: Scalar>(
    poly: &Polygon<T>,
    width: usize,
    height: usize,
    tau: T,
) -> MembershipField<T> {
    MembershipField::build(poly, width, height, tau, true)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn contour_pixels_sit_at_one_half() {
        // Edge x = 2.5 passes through the centers of column 2.
        let poly =
            Polygon::<f64>::from_xy(&[(0.0, 0.0), (2.5, 0.0), (2.5, 6.0), (0.0, 6.0)]).unwrap();
        let f = relaxed_field(&poly, 5, 4, 0.1);
        for row in 0..4 {
            assert_eq!(f.values()[row * 5 + 2], 0.5);
            assert!(f.hard()[row * 5 + 2]);
        }
    }

    #[test]
    fn symmetric_pair_sums_to_one() {
        // Centers of columns 1 and 3 lie 1 px either side of the edge x = 2.5.
        let poly =
            Polygon::<f64>::from_xy(&[(-10.0, -10.0), (2.5, -10.0), (2.5, 10.0), (-10.0, 10.0)])
                .unwrap();
        let f = relaxed_field(&poly, 5, 1, 0.3);
        assert!((f.values()[1] + f.values()[3] - 1.0).abs() < 1e-15);
        assert!(f.values()[1] > 0.5 && f.values()[3] < 0.5);
    }

    #[test]
    fn deep_pixels_saturate() {
        // Pixel center (0.5, 0.5) is 3 px inside; tau = 0.1 gives D / tau = 30.
        let poly =
            Polygon::<f64>::from_xy(&[(-2.5, -2.5), (3.5, -2.5), (3.5, 3.5), (-2.5, 3.5)]).unwrap();
        let f = relaxed_field(&poly, 1, 1, 0.1);
        assert!(f.values()[0] > 1.0 - 1e-13 && f.values()[0] < 1.0);
        assert!((f.distances()[0] - 3.0).abs() < 1e-15);
    }

    #[test]
    fn values_order_with_hard_labels() {
        let poly =
            Polygon::<f64>::from_xy(&[(1.2, 0.7), (6.3, 1.9), (4.1, 5.6), (0.4, 4.4)]).unwrap();
        let f = relaxed_field(&poly, 8, 7, 0.5);
        for i in 0..f.len() {
            let v = f.values()[i];
            assert!(v > 0.0 && v < 1.0);
            if f.distances()[i] > 0.0 {
                assert_eq!(v > 0.5, f.hard()[i]);
            }
        }
        let no_grad = MembershipField::build(&poly, 8, 7, 0.5, false);
        assert_eq!(no_grad.values(), f.values());
        assert!(!no_grad.has_gradients());
    }
}
