//! Box overlap scores with gradients w.r.t. the first box's corners.

use crate::polygeom::BBox;
use crate::scalar::Scalar;

/// Overlap score of a predicted box against a reference box, with its
/// derivative w.r.t. the predicted `(x1, y1, x2, y2)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoxScore<T> {
    pub value: T,
    pub grad: [T; 4],
}

/// d min(a, b) / da, splitting ties evenly.
#[inline]
fn dmin<T: Scalar>(a: T, b: T) -> T {
    if a < b {
        T::one()
    } else if a > b {
        T::zero()
    } else {
        T::lit(0.5)
    }
}

#[inline]
fn dmax<T: Scalar>(a: T, b: T) -> T {
    dmin(b, a)
}

#[inline]
fn add4<T: Scalar>(a: [T; 4], b: [T; 4], s: T) -> [T; 4] {
    std::array::from_fn(|i| a[i] + s * b[i])
}

/// Shared IoU pieces: intersection, union, IoU and their gradients, plus the
/// enclosing box extents and gradients.
struct Overlap<T> {
    union: T,
    iou: T,
    d_union: [T; 4],
    d_iou: [T; 4],
    cw: T,
    ch: T,
    d_cw: [T; 4],
    d_ch: [T; 4],
}

fn overlap<T: Scalar>(a: &BBox<T>, b: &BBox<T>) -> Overlap<T> {
    let zero = T::zero();
    let (wa, ha) = (a.width(), a.height());
    let iw = a.x2.min(b.x2) - a.x1.max(b.x1);
    let ih = a.y2.min(b.y2) - a.y1.max(b.y1);
    let (inter, d_inter) = if iw > zero && ih > zero {
        let d_iw = [-dmax(a.x1, b.x1), zero, dmin(a.x2, b.x2), zero];
        let d_ih = [zero, -dmax(a.y1, b.y1), zero, dmin(a.y2, b.y2)];
        (
            iw * ih,
            std::array::from_fn(|i| d_iw[i] * ih + d_ih[i] * iw),
        )
    } else {
        (zero, [zero; 4])
    };
    let d_area_a = [-ha, -wa, ha, wa];
    let union = a.area() + b.area() - inter;
    let d_union: [T; 4] = std::array::from_fn(|i| d_area_a[i] - d_inter[i]);
    let iou = inter / union;
    let d_iou =
        std::array::from_fn(|i| (d_inter[i] * union - inter * d_union[i]) / (union * union));

    let cw = a.x2.max(b.x2) - a.x1.min(b.x1);
    let ch = a.y2.max(b.y2) - a.y1.min(b.y1);
    let d_cw = [-dmin(a.x1, b.x1), zero, dmax(a.x2, b.x2), zero];
    let d_ch = [zero, -dmin(a.y1, b.y1), zero, dmax(a.y2, b.y2)];
    Overlap {
        union,
        iou,
        d_union,
        d_iou,
        cw,
        ch,
        d_cw,
        d_ch,
    }
}

/// `atan(w / h)` with `atan(0 / 0) := atan(1)`, and its partials in `(w, h)`.
fn aspect_angle<T: Scalar>(w: T, h: T) -> (T, T, T) {
    let r2 = w * w + h * h;
    if r2 == T::zero() {
        return (T::FRAC_PI_4(), T::zero(), T::zero());
    }
    (w.atan2(h), h / r2, -w / r2)
}

/// Complete IoU of `a` against `b` (`b` must have positive area). The
/// trade-off coefficient of the aspect term is held constant when
/// differentiating.
pub fn ciou<T: Scalar>(a: &BBox<T>, b: &BBox<T>) -> BoxScore<T> {
    ciou_with(a, b, None)
}

/// The aspect-term trade-off coefficient `v / ((1 - IoU) + v)`.
pub fn ciou_alpha<T: Scalar>(a: &BBox<T>, b: &BBox<T>) -> T {
    let o = overlap(a, b);
    let (v, _) = aspect_penalty(a, b);
    let denom = (T::one() - o.iou) + v;
    if denom > T::zero() {
        v / denom
    } else {
        T::zero()
    }
}

/// CIoU with a fixed trade-off coefficient; the gradient is exact for this
/// function and equals [`ciou`]'s at `alpha = ciou_alpha(a, b)`.
pub fn ciou_frozen<T: Scalar>(a: &BBox<T>, b: &BBox<T>, alpha: T) -> BoxScore<T> {
    ciou_with(a, b, Some(alpha))
}

/// `v` of the aspect term and its gradient.
fn aspect_penalty<T: Scalar>(a: &BBox<T>, b: &BBox<T>) -> (T, [T; 4]) {
    let k = T::lit(4.0) / (T::PI() * T::PI());
    let (ang_a, da_dw, da_dh) = aspect_angle(a.width(), a.height());
    let (ang_b, _, _) = aspect_angle(b.width(), b.height());
    let diff = ang_b - ang_a;
    let dv_dang = -T::lit(2.0) * k * diff;
    (
        k * diff * diff,
        [
            -da_dw * dv_dang,
            -da_dh * dv_dang,
            da_dw * dv_dang,
            da_dh * dv_dang,
        ],
    )
}

fn ciou_with<T: Scalar>(a: &BBox<T>, b: &BBox<T>, alpha: Option<T>) -> BoxScore<T> {
    let two = T::lit(2.0);
    let o = overlap(a, b);

    let (ca, cb) = (a.center(), b.center());
    let (dx, dy) = (ca.x - cb.x, ca.y - cb.y);
    let rho2 = dx * dx + dy * dy;
    let d_rho2 = [dx, dy, dx, dy];
    let c2 = o.cw * o.cw + o.ch * o.ch;
    let d_c2: [T; 4] = std::array::from_fn(|i| two * (o.cw * o.d_cw[i] + o.ch * o.d_ch[i]));
    let d_center: [T; 4] = std::array::from_fn(|i| (d_rho2[i] * c2 - rho2 * d_c2[i]) / (c2 * c2));

    let (v, d_v) = aspect_penalty(a, b);
    let alpha = alpha.unwrap_or_else(|| {
        let denom = (T::one() - o.iou) + v;
        if denom > T::zero() {
            v / denom
        } else {
            T::zero()
        }
    });

    let value = o.iou - rho2 / c2 - alpha * v;
    let grad = add4(add4(o.d_iou, d_center, -T::one()), d_v, -alpha);
    BoxScore { value, grad }
}

/// Generalized IoU of `a` against `b` (`b` must have positive area).
pub fn giou<T: Scalar>(a: &BBox<T>, b: &BBox<T>) -> BoxScore<T> {
    let o = overlap(a, b);
    let c = o.cw * o.ch;
    let d_c: [T; 4] = std::array::from_fn(|i| o.d_cw[i] * o.ch + o.cw * o.d_ch[i]);
    let value = o.iou - T::one() + o.union / c;
    let grad =
        std::array::from_fn(|i| o.d_iou[i] + (o.d_union[i] * c - o.union * d_c[i]) / (c * c));
    BoxScore { value, grad }
}
