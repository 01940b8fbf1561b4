use super::{
    global_pairwise_loss, global_value_with_means, region_means, unary_alpha, unary_loss,
    unary_value_frozen, AffinityTable, EnergyConfig, LossValue, MembershipField,
};
use crate::error::Result;
use crate::image::ImagePatch;
use crate::image::Rgb;
use crate::polygeom::{BBox, Polygon};
use crate::roi::{make_clip_frame, ClipConfig, ClipFrame};
use crate::scalar::Scalar;

/// Weighted total and its parts. All gradients are w.r.t. image-frame
/// vertex coordinates; component values and gradients are unweighted.
#[derive(Debug, Clone, PartialEq)]
pub struct TotalLoss<T> {
    pub value: T,
    pub gradient: Vec<T>,
    pub unary: LossValue<T>,
    pub local: LossValue<T>,
    pub global: LossValue<T>,
}

/// Coefficients the analytic gradient treats as constants: the CIoU
/// trade-off and, with detached means, the two region means.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FrozenCoefficients<T> {
    pub alpha_c: Option<T>,
    pub means: Option<(Rgb<T>, Rgb<T>)>,
}

/// Everything about one instance that stays fixed while its polygon moves:
/// the box, the clip window and the pair affinities.
#[derive(Debug, Clone)]
pub struct EnergyModel<T> {
    gt: BBox<T>,
    cfg: EnergyConfig,
    frame: ClipFrame<T>,
    table: Option<AffinityTable<T>>,
}

impl<T: Scalar> EnergyModel<T> {
    pub fn new(
        img: &ImagePatch<T>,
        gt: &BBox<T>,
        ecfg: &EnergyConfig,
        ccfg: &ClipConfig,
    ) -> Result<Self> {
        ecfg.validate()?;
        let frame = make_clip_frame(gt, img, ccfg)?;
        let table = (ecfg.beta > 0.0).then(|| AffinityTable::from_config(frame.patch(), ecfg));
        Ok(Self {
            gt: *gt,
            cfg: *ecfg,
            frame,
            table,
        })
    }

    pub fn frame(&self) -> &ClipFrame<T> {
        &self.frame
    }

    pub fn config(&self) -> &EnergyConfig {
        &self.cfg
    }

    pub fn gt(&self) -> &BBox<T> {
        &self.gt
    }

    /// Evaluates the weighted loss of an image-frame polygon. Without
    /// `with_grad` all gradient vectors are zero.
    pub fn evaluate(&self, poly: &Polygon<T>, with_grad: bool) -> Result<TotalLoss<T>> {
        let k2 = 2 * poly.len();
        let zero_loss = || LossValue {
            value: T::zero(),
            gradient: vec![T::zero(); k2],
        };
        let (alpha, beta, gamma) = (
            T::lit(self.cfg.alpha),
            T::lit(self.cfg.beta),
            T::lit(self.cfg.gamma),
        );

        let unary = unary_loss(poly, &self.gt, self.cfg.unary);

        let (local, global) = if self.cfg.has_pairwise() {
            let patch = self.frame.patch();
            let field = self.field(poly, with_grad);
            let local = match &self.table {
                Some(t) => t.local_loss(&field, self.cfg.reduction)?,
                None => zero_loss(),
            };
            let global = if self.cfg.gamma > 0.0 {
                global_pairwise_loss(&field, patch, &self.cfg)?
            } else {
                zero_loss()
            };
            let to_image = |l: LossValue<T>| LossValue {
                value: l.value,
                gradient: self.frame.chain_gradient(&l.gradient),
            };
            (to_image(local), to_image(global))
        } else {
            (zero_loss(), zero_loss())
        };

        let value = alpha * unary.value + beta * local.value + gamma * global.value;
        let gradient = (0..k2)
            .map(|i| {
                alpha * unary.gradient[i] + beta * local.gradient[i] + gamma * global.gradient[i]
            })
            .collect();
        Ok(TotalLoss {
            value,
            gradient,
            unary,
            local,
            global,
        })
    }
}

impl<T: Scalar> EnergyModel<T> {
    /// The constants [`EnergyModel::evaluate`] differentiates around at `poly`.
    pub fn frozen_coefficients(&self, poly: &Polygon<T>) -> Result<FrozenCoefficients<T>> {
        let means = if self.cfg.detach_means && self.cfg.gamma > 0.0 {
            let field = self.field(poly, false);
            let m = region_means(&field, self.frame.patch())?;
            Some((m.u_in, m.u_out))
        } else {
            None
        };
        Ok(FrozenCoefficients {
            alpha_c: unary_alpha(poly, &self.gt, self.cfg.unary),
            means,
        })
    }

    /// Loss value with the given coefficients held fixed; the gradient of
    /// [`EnergyModel::evaluate`] is exact for this function when the
    /// coefficients come from [`EnergyModel::frozen_coefficients`] at the
    /// same polygon.
    pub fn value_frozen(&self, poly: &Polygon<T>, frozen: &FrozenCoefficients<T>) -> Result<T> {
        let (alpha, beta, gamma) = (
            T::lit(self.cfg.alpha),
            T::lit(self.cfg.beta),
            T::lit(self.cfg.gamma),
        );
        let mut value = alpha * unary_value_frozen(poly, &self.gt, self.cfg.unary, frozen.alpha_c);
        if !self.cfg.has_pairwise() {
            return Ok(value);
        }
        let field = self.field(poly, false);
        let patch = self.frame.patch();
        if let Some(t) = &self.table {
            value = value + beta * t.local_loss(&field, self.cfg.reduction)?.value;
        }
        if self.cfg.gamma > 0.0 {
            let g = match &frozen.means {
                Some((u_in, u_out)) => {
                    global_value_with_means(&field, patch, self.cfg.reduction, u_in, u_out)?
                }
                None => global_pairwise_loss(&field, patch, &self.cfg)?.value,
            };
            value = value + gamma * g;
        }
        Ok(value)
    }

    fn field(&self, poly: &Polygon<T>, with_grad: bool) -> MembershipField<T> {
        let patch = self.frame.patch();
        MembershipField::build(
            &self.frame.to_grid(poly),
            patch.width(),
            patch.height(),
            T::lit(self.cfg.tau),
            with_grad,
        )
    }
}

/// One-shot evaluation of the weighted loss; builds the clip window on the
/// fly. Use [`EnergyModel`] when evaluating the same instance repeatedly.
pub fn total_loss<T: Scalar>(
    poly: &Polygon<T>,
    gt: &BBox<T>,
    img: &ImagePatch<T>,
    ecfg: &EnergyConfig,
    ccfg: &ClipConfig,
) -> Result<TotalLoss<T>> {
    EnergyModel::new(img, gt, ecfg, ccfg)?.evaluate(poly, true)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::energy::UnaryKind;
    use crate::polygeom::init_ellipse;

    fn scene() -> (ImagePatch<f64>, BBox<f64>, Polygon<f64>) {
        let img = ImagePatch::<f64>::from_fn(40, 30, |c, r| {
            let inside = (c as f64 - 20.0).powi(2) / 100.0 + (r as f64 - 15.0).powi(2) / 49.0 < 1.0;
            if inside {
                [0.9, 0.8, 0.7]
            } else {
                [0.1, 0.15, 0.2]
            }
        });
        let gt = BBox::new(10.0, 8.0, 30.0, 22.0).unwrap();
        let poly = init_ellipse(&BBox::new(11.0, 9.5, 28.0, 21.0).unwrap(), 16).unwrap();
        (img, gt, poly)
    }

    #[test]
    fn unary_only_equals_unary_loss() {
        let (img, gt, poly) = scene();
        let cfg = EnergyConfig::unary_only();
        let t = total_loss(&poly, &gt, &img, &cfg, &ClipConfig::default()).unwrap();
        let u = unary_loss(&poly, &gt, UnaryKind::Ciou);
        assert_eq!(t.value, u.value);
        assert_eq!(t.gradient, u.gradient);
    }

    #[test]
    fn total_is_weighted_sum_of_parts() {
        let (img, gt, poly) = scene();
        let cfg = EnergyConfig {
            alpha: 0.7,
            beta: 0.4,
            gamma: 0.2,
            tau: 0.5,
            ..EnergyConfig::default()
        };
        let t = total_loss(&poly, &gt, &img, &cfg, &ClipConfig { grid: 16, pad: 2 }).unwrap();
        let want = 0.7 * t.unary.value + 0.4 * t.local.value + 0.2 * t.global.value;
        assert!((t.value - want).abs() < 1e-12);
        for i in 0..t.gradient.len() {
            let g =
                0.7 * t.unary.gradient[i] + 0.4 * t.local.gradient[i] + 0.2 * t.global.gradient[i];
            assert!((t.gradient[i] - g).abs() < 1e-12);
        }
        assert!(t.local.value > 0.0 && t.global.value > 0.0);
    }

    #[test]
    fn frozen_value_matches_at_own_coefficients() {
        let (img, gt, poly) = scene();
        for detach_means in [true, false] {
            let cfg = EnergyConfig {
                detach_means,
                ..EnergyConfig::default()
            };
            let m = EnergyModel::new(&img, &gt, &cfg, &ClipConfig { grid: 16, pad: 2 }).unwrap();
            let frozen = m.frozen_coefficients(&poly).unwrap();
            assert_eq!(frozen.means.is_some(), detach_means);
            let v = m.value_frozen(&poly, &frozen).unwrap();
            assert!((v - m.evaluate(&poly, false).unwrap().value).abs() < 1e-14);
        }
    }

    #[test]
    fn value_only_evaluation_matches() {
        let (img, gt, poly) = scene();
        let m =
            EnergyModel::new(&img, &gt, &EnergyConfig::default(), &ClipConfig::default()).unwrap();
        let a = m.evaluate(&poly, true).unwrap();
        let b = m.evaluate(&poly, false).unwrap();
        assert_eq!(a.value, b.value);
        assert!(b.local.gradient.iter().all(|g| *g == 0.0));
    }
}
