//! Local (windowed affinity) and global (region homogeneity) pairwise terms.

use super::{EnergyConfig, LossValue, MembershipField, Reduction};
use crate::error::{Error, Result};
use crate::image::{color_distance, ImagePatch, Rgb};
use crate::polygeom::Polygon;
use crate::scalar::Scalar;

/// Color affinity `exp(-|c1 - c2| / (2 sigma^2))` with the unsquared
/// Euclidean color distance.
#[inline]
pub fn affinity_weight<T: Scalar>(c1: &Rgb<T>, c2: &Rgb<T>, sigma_i: T) -> T {
    (-color_distance(c1, c2) / (T::lit(2.0) * sigma_i * sigma_i)).exp()
}

/// Every unordered pixel pair of the dilated window, with its affinity.
/// Only depends on the image, so it is built once per clip window.
#[derive(Debug, Clone)]
pub struct AffinityTable<T> {
    width: usize,
    height: usize,
    pairs: Vec<(u32, u32, T)>,
}

impl<T: Scalar> AffinityTable<T> {
    pub fn new(img: &ImagePatch<T>, window: usize, dilation: usize, sigma_i: T) -> Self {
        let (w, h) = (img.width() as isize, img.height() as isize);
        let r = (window / 2) as isize;
        let dil = dilation as isize;
        // Half of the window offsets: one representative per unordered pair.
        let offsets: Vec<(isize, isize)> = (-r..=r)
            .flat_map(|dy| (-r..=r).map(move |dx| (dy * dil, dx * dil)))
            .filter(|&(dy, dx)| dy > 0 || (dy == 0 && dx > 0))
            .collect();
        let mut pairs = Vec::with_capacity(img.len() * offsets.len());
        for row in 0..h {
            for col in 0..w {
                let a = (row * w + col) as usize;
                for &(dy, dx) in &offsets {
                    let (r2, c2) = (row + dy, col + dx);
                    if r2 < 0 || r2 >= h || c2 < 0 || c2 >= w {
                        continue;
                    }
                    let b = (r2 * w + c2) as usize;
                    let wgt = affinity_weight(&img.pixels()[a], &img.pixels()[b], sigma_i);
                    pairs.push((a as u32, b as u32, wgt));
                }
            }
        }
        Self {
            width: img.width(),
            height: img.height(),
            pairs,
        }
    }

    pub fn from_config(img: &ImagePatch<T>, cfg: &EnergyConfig) -> Self {
        Self::new(img, cfg.window, cfg.dilation, T::lit(cfg.sigma_i))
    }

    pub fn pair_count(&self) -> usize {
        self.pairs.len()
    }

    pub fn pairs(&self) -> &[(u32, u32, T)] {
        &self.pairs
    }

    fn check(&self, field: &MembershipField<T>) -> Result<()> {
        if field.width() != self.width || field.height() != self.height {
            return Err(Error::GridMismatch {
                field_w: field.width(),
                field_h: field.height(),
                img_w: self.width,
                img_h: self.height,
            });
        }
        Ok(())
    }

    fn normalizer(&self, reduction: Reduction) -> T {
        match reduction {
            Reduction::Sum => T::one(),
            Reduction::Mean => T::one() / T::from_usize_lossy(self.pairs.len().max(1)),
        }
    }

    /// Sum of `w |U'(a) - U'(b)|` over the table's pairs. The gradient is
    /// accumulated when the field carries gradients.
    pub fn local_loss(
        &self,
        field: &MembershipField<T>,
        reduction: Reduction,
    ) -> Result<LossValue<T>> {
        self.check(field)?;
        let u = field.values();
        let norm = self.normalizer(reduction);
        let mut value = T::zero();
        let with_grad = field.has_gradients();
        let mut gradient = vec![T::zero(); 2 * field.vertex_count()];
        for &(a, b, w) in &self.pairs {
            let (a, b) = (a as usize, b as usize);
            let diff = u[a] - u[b];
            value = value + w * diff.abs();
            if with_grad && diff != T::zero() {
                let s = w * diff.signum() * norm;
                field.grad(a).accumulate(s, &mut gradient);
                field.grad(b).accumulate(-s, &mut gradient);
            }
        }
        Ok(LossValue {
            value: value * norm,
            gradient,
        })
    }

    /// Same sum with hard labels in place of relaxed values.
    pub fn discrete_energy(&self, hard: &[bool], reduction: Reduction) -> T {
        let total: T = self
            .pairs
            .iter()
            .filter(|&&(a, b, _)| hard[a as usize] != hard[b as usize])
            .map(|&(_, _, w)| w)
            .fold(T::zero(), |acc, w| acc + w);
        total * self.normalizer(reduction)
    }
}

/// Local pairwise loss of a relaxed field on `img` (same grid).
pub fn local_pairwise_loss<T: Scalar>(
    field: &MembershipField<T>,
    img: &ImagePatch<T>,
    cfg: &EnergyConfig,
) -> Result<LossValue<T>> {
    AffinityTable::from_config(img, cfg).local_loss(field, cfg.reduction)
}

/// Local pairwise energy with hard point-in-polygon labels (no gradient).
pub fn discrete_local_energy<T: Scalar>(
    poly: &Polygon<T>,
    img: &ImagePatch<T>,
    cfg: &EnergyConfig,
) -> T {
    let field = MembershipField::build(poly, img.width(), img.height(), T::lit(cfg.tau), false);
    AffinityTable::from_config(img, cfg).discrete_energy(field.hard(), cfg.reduction)
}

/// Membership-weighted mean colors inside and outside the contour.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RegionMeans<T> {
    pub u_in: Rgb<T>,
    pub u_out: Rgb<T>,
    pub in_mass: T,
    pub out_mass: T,
}

pub fn region_means<T: Scalar>(
    field: &MembershipField<T>,
    img: &ImagePatch<T>,
) -> Result<RegionMeans<T>> {
    check_grid(field, img)?;
    let mut sum_in = [T::zero(); 3];
    let mut sum_out = [T::zero(); 3];
    let mut in_mass = T::zero();
    let mut out_mass = T::zero();
    for (&u, c) in field.values().iter().zip(img.pixels()) {
        let v = T::one() - u;
        in_mass = in_mass + u;
        out_mass = out_mass + v;
        for ch in 0..3 {
            sum_in[ch] = sum_in[ch] + u * c[ch];
            sum_out[ch] = sum_out[ch] + v * c[ch];
        }
    }
    // A fully saturated field can leave one side with exactly zero mass; its
    // mean is then irrelevant because every pixel weight on that side is 0.
    let mean = |s: [T; 3], m: T| {
        if m > T::zero() {
            s.map(|v| v / m)
        } else {
            [T::zero(); 3]
        }
    };
    Ok(RegionMeans {
        u_in: mean(sum_in, in_mass),
        u_out: mean(sum_out, out_mass),
        in_mass,
        out_mass,
    })
}

fn check_grid<T: Scalar>(field: &MembershipField<T>, img: &ImagePatch<T>) -> Result<()> {
    if field.width() != img.width() || field.height() != img.height() {
        return Err(Error::GridMismatch {
            field_w: field.width(),
            field_h: field.height(),
            img_w: img.width(),
            img_h: img.height(),
        });
    }
    Ok(())
}

fn region_value<T: Scalar>(u: &[T], residuals: &[(T, T)]) -> T {
    u.iter()
        .zip(residuals)
        .fold(T::zero(), |acc, (&u, &(r_in, r_out))| {
            acc + r_in * u + r_out * (T::one() - u)
        })
}

/// Global term value with both region means given instead of measured.
/// With `detach_means`, [`global_pairwise_loss`]'s gradient is the exact
/// gradient of this function at the measured means.
pub fn global_value_with_means<T: Scalar>(
    field: &MembershipField<T>,
    img: &ImagePatch<T>,
    reduction: Reduction,
    u_in: &Rgb<T>,
    u_out: &Rgb<T>,
) -> Result<T> {
    check_grid(field, img)?;
    let norm = match reduction {
        Reduction::Sum => T::one(),
        Reduction::Mean => T::one() / T::from_usize_lossy(field.len().max(1)),
    };
    let residuals: Vec<(T, T)> = img
        .pixels()
        .iter()
        .map(|c| (color_distance(c, u_in), color_distance(c, u_out)))
        .collect();
    Ok(region_value(field.values(), &residuals) * norm)
}

/// Region homogeneity: `sum |I - u_in| U' + sum |I - u_out| (1 - U')`.
pub fn global_pairwise_loss<T: Scalar>(
    field: &MembershipField<T>,
    img: &ImagePatch<T>,
    cfg: &EnergyConfig,
) -> Result<LossValue<T>> {
    let means = region_means(field, img)?;
    let norm = match cfg.reduction {
        Reduction::Sum => T::one(),
        Reduction::Mean => T::one() / T::from_usize_lossy(field.len().max(1)),
    };
    let u = field.values();
    let pixels = img.pixels();
    let residuals: Vec<(T, T)> = pixels
        .iter()
        .map(|c| {
            (
                color_distance(c, &means.u_in),
                color_distance(c, &means.u_out),
            )
        })
        .collect();
    let value = region_value(u, &residuals);

    let mut gradient = vec![T::zero(); 2 * field.vertex_count()];
    if field.has_gradients() {
        // Optional sensitivity of the loss to the two means.
        let (g_in, g_out) = if cfg.detach_means {
            ([T::zero(); 3], [T::zero(); 3])
        } else {
            let mut g_in = [T::zero(); 3];
            let mut g_out = [T::zero(); 3];
            for ((c, &u), &(r_in, r_out)) in pixels.iter().zip(u).zip(&residuals) {
                for ch in 0..3 {
                    if r_in > T::zero() {
                        g_in[ch] = g_in[ch] - u * (c[ch] - means.u_in[ch]) / r_in;
                    }
                    if r_out > T::zero() {
                        g_out[ch] = g_out[ch] - (T::one() - u) * (c[ch] - means.u_out[ch]) / r_out;
                    }
                }
            }
            (g_in, g_out)
        };
        for (idx, (c, &(r_in, r_out))) in pixels.iter().zip(&residuals).enumerate() {
            let mut coef = r_in - r_out;
            if !cfg.detach_means {
                for ch in 0..3 {
                    if means.in_mass > T::zero() {
                        coef = coef + g_in[ch] * (c[ch] - means.u_in[ch]) / means.in_mass;
                    }
                    if means.out_mass > T::zero() {
                        coef = coef - g_out[ch] * (c[ch] - means.u_out[ch]) / means.out_mass;
                    }
                }
            }
            field.grad(idx).accumulate(coef * norm, &mut gradient);
        }
    }
    Ok(LossValue {
        value: value * norm,
        gradient,
    })
}
