use super::{ciou, ciou_alpha, ciou_frozen, giou, LossValue, UnaryKind};
use crate::polygeom::{bbox_of, BBox, Polygon};
use crate::scalar::Scalar;

/// `1 - CIoU(bbox(poly), gt)` (or GIoU). Only the four vertices attaining
/// the polygon's extremes receive gradient.
pub fn unary_loss<T: Scalar>(poly: &Polygon<T>, gt: &BBox<T>, kind: UnaryKind) -> LossValue<T> {
    let ext = bbox_of(poly);
    let score = match kind {
        UnaryKind::Ciou => ciou(&ext.bbox, gt),
        UnaryKind::Giou => giou(&ext.bbox, gt),
    };
    let mut gradient = vec![T::zero(); 2 * poly.len()];
    ext.route_gradient(score.grad.map(|g| -g), &mut gradient);
    LossValue {
        value: T::one() - score.value,
        gradient,
    }
}

/// CIoU trade-off coefficient at the polygon's box; `None` for GIoU.
pub fn unary_alpha<T: Scalar>(poly: &Polygon<T>, gt: &BBox<T>, kind: UnaryKind) -> Option<T> {
    match kind {
        UnaryKind::Ciou => Some(ciou_alpha(&bbox_of(poly).bbox, gt)),
        UnaryKind::Giou => None,
    }
}

/// Unary loss value with the CIoU trade-off coefficient fixed (ignored for
/// GIoU). [`unary_loss`]'s gradient is the exact gradient of this function
/// at `alpha = unary_alpha(poly, ..)`.
pub fn unary_value_frozen<T: Scalar>(
    poly: &Polygon<T>,
    gt: &BBox<T>,
    kind: UnaryKind,
    alpha: Option<T>,
) -> T {
    let b = bbox_of(poly).bbox;
    let score = match (kind, alpha) {
        (UnaryKind::Ciou, Some(a)) => ciou_frozen(&b, gt, a),
        (UnaryKind::Ciou, None) => ciou(&b, gt),
        (UnaryKind::Giou, _) => giou(&b, gt),
    };
    T::one() - score.value
}

/// One-sided derivatives of the unary loss w.r.t. box side `side`
/// (`0..4` for `x1, y1, x2, y2`) at the point where that side coincides with
/// the reference side: `(from below, from above)`. Other sides are taken
/// from `bbox`.
pub fn unary_side_slopes<T: Scalar>(
    bbox: &BBox<T>,
    gt: &BBox<T>,
    kind: UnaryKind,
    side: usize,
) -> (T, T) {
    let target = gt.as_array()[side];
    let h = T::lit(1e-7) * (T::one() + target.abs());
    let slope_at = |c: T| {
        let mut a = bbox.as_array();
        a[side] = c;
        let b = BBox {
            x1: a[0],
            y1: a[1],
            x2: a[2],
            y2: a[3],
        };
        let score = match kind {
            UnaryKind::Ciou => ciou(&b, gt),
            UnaryKind::Giou => giou(&b, gt),
        };
        -score.grad[side]
    };
    (slope_at(target - h), slope_at(target + h))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::polygeom::init_ellipse;

    #[test]
    fn side_slopes_bracket_zero_at_the_reference_box() {
        let gt = BBox::<f64>::new(0.0, 0.0, 10.0, 6.0).unwrap();
        for kind in [UnaryKind::Ciou, UnaryKind::Giou] {
            for side in 0..4 {
                let (below, above) = unary_side_slopes(&gt, &gt, kind, side);
                assert!(
                    below < 0.0 && above > 0.0,
                    "{kind:?} side {side}: {below} {above}"
                );
            }
        }
    }

    #[test]
    fn zero_when_box_matches() {
        let gt = BBox::<f64>::new(2.0, 3.0, 12.0, 9.0).unwrap();
        let poly = init_ellipse(&gt, 64).unwrap();
        let l = unary_loss(&poly, &gt, UnaryKind::Ciou);
        assert!(l.value.abs() < 1e-12);
        assert!(l.gradient.iter().all(|g| *g == 0.0));
        assert!(unary_loss(&poly, &gt, UnaryKind::Giou).value.abs() < 1e-12);
    }

    #[test]
    fn collapsed_polygon_at_center() {
        let gt = BBox::new(0.0, 0.0, 2.0, 2.0).unwrap();
        let poly = Polygon::<f64>::from_xy(&[(1.0, 1.0); 6]).unwrap();
        let l = unary_loss(&poly, &gt, UnaryKind::Ciou);
        // IoU 0, coincident centers, equal (pi/4) aspect angles.
        assert_eq!(l.value, 1.0);
        assert!(l.gradient.iter().all(|g| g.is_finite()));
        assert!(l.gradient[2..].iter().all(|g| *g == 0.0));
    }

    #[test]
    fn gradient_routes_to_extremes_only() {
        let gt = BBox::new(0.0, 0.0, 10.0, 10.0).unwrap();
        let poly =
            Polygon::<f64>::from_xy(&[(1.0, 5.0), (5.0, 1.5), (8.0, 5.0), (5.0, 7.0), (4.0, 5.0)])
                .unwrap();
        let l = unary_loss(&poly, &gt, UnaryKind::Ciou);
        assert_eq!(l.gradient[8], 0.0);
        assert_eq!(l.gradient[9], 0.0);
        assert!(
            l.gradient[0] > 0.0,
            "left extreme should be pushed outwards"
        );
        assert!(
            l.gradient[4] < 0.0,
            "right extreme should be pushed outwards"
        );
    }
}
