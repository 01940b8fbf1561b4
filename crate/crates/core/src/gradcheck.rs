//! Central finite-difference checks of every analytic gradient on random
//! small instances.
//!
//! A coordinate is skipped when moving it by `±h` changes the structure the
//! loss is piecewise-smooth in: which vertices attain the box extremes, how
//! the box sides order against the reference box, each pixel's inside label
//! and nearest segment, and the order of every pairwise membership
//! difference.
//!
//! Coefficients the analytic gradients treat as constants (the CIoU
//! trade-off, detached region means) are frozen at the base point in the
//! differenced function too.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::energy::{
    global_pairwise_loss, global_value_with_means, region_means, unary_alpha, unary_loss,
    unary_value_frozen, AffinityTable, EnergyConfig, EnergyModel, MembershipField, UnaryKind,
};
use crate::image::ImagePatch;
use crate::polygeom::{
    bbox_of, nearest_segment_distance, point_in_polygon, BBox, Point, Polygon, SegmentCase,
};
use crate::roi::ClipConfig;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Term {
    Unary,
    Membership,
    Local,
    Global,
    Total,
}

impl Term {
    pub const ALL: [Term; 5] = [
        Term::Unary,
        Term::Membership,
        Term::Local,
        Term::Global,
        Term::Total,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Term::Unary => "unary",
            Term::Membership => "membership",
            Term::Local => "local",
            Term::Global => "global",
            Term::Total => "total",
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct GradcheckOptions {
    pub seed: u64,
    pub trials: usize,
    /// Finite-difference step in pixels.
    pub step: f64,
    pub tolerance: f64,
    /// Test hook: scales this term's analytic gradient by 1.1.
    pub corrupt: Option<Term>,
}

impl Default for GradcheckOptions {
    fn default() -> Self {
        Self {
            seed: 0,
            trials: 100,
            step: 1e-4,
            tolerance: 1e-3,
            corrupt: None,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct TermReport {
    pub term: Term,
    pub trials: usize,
    /// Coordinates compared across all trials.
    pub checked: usize,
    pub skipped: usize,
    pub worst: f64,
    pub passed: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct GradcheckReport {
    pub tolerance: f64,
    pub terms: Vec<TermReport>,
}

impl GradcheckReport {
    pub fn passed(&self) -> bool {
        self.terms.iter().all(|t| t.passed)
    }

    pub fn failing(&self) -> Vec<Term> {
        self.terms
            .iter()
            .filter(|t| !t.passed)
            .map(|t| t.term)
            .collect()
    }
}

/// `|a - n| / max(|a|, |n|, 1e-9)` over the compared coordinates.
pub fn relative_error(analytic: &[f64], numeric: &[f64]) -> f64 {
    let norm = |v: &mut dyn Iterator<Item = f64>| v.map(|x| x * x).sum::<f64>().sqrt();
    let diff = norm(&mut analytic.iter().zip(numeric).map(|(a, n)| a - n));
    let scale = norm(&mut analytic.iter().copied())
        .max(norm(&mut numeric.iter().copied()))
        .max(1e-9);
    diff / scale
}

/// One random instance: an image, a box inside it and a polygon around the
/// box, plus the matching grid-frame data.
struct Instance {
    img: ImagePatch<f64>,
    gt: BBox<f64>,
    poly: Polygon<f64>,
    ecfg: EnergyConfig,
    ccfg: ClipConfig,
}

fn random_instance(rng: &mut ChaCha8Rng) -> Instance {
    let (w, h) = (rng.random_range(20..36), rng.random_range(20..36));
    let img = ImagePatch::from_fn(w, h, |_, _| [rng.random(), rng.random(), rng.random()]);
    let bw = rng.random_range(6.0..(w as f64 - 4.0));
    let bh = rng.random_range(6.0..(h as f64 - 4.0));
    let x = rng.random_range(1.0..(w as f64 - bw - 1.0));
    let y = rng.random_range(1.0..(h as f64 - bh - 1.0));
    let gt = BBox::from_xywh(x, y, bw, bh).expect("positive box");
    let k = rng.random_range(5..11);
    let c = gt.center();
    let phase = rng.random_range(0.0..std::f64::consts::TAU);
    let pts: Vec<Point<f64>> = (0..k)
        .map(|j| {
            let a =
                phase + std::f64::consts::TAU * (j as f64 + rng.random_range(-0.3..0.3)) / k as f64;
            let r = rng.random_range(0.35..0.65);
            Point::new(c.x + r * bw * a.cos(), c.y + r * bh * a.sin())
        })
        .collect();
    let ecfg = EnergyConfig {
        alpha: rng.random_range(0.5..1.5),
        beta: rng.random_range(0.1..1.0),
        gamma: rng.random_range(0.01..0.5),
        tau: rng.random_range(0.1..1.0),
        sigma_i: rng.random_range(0.2..1.5),
        window: if rng.random_bool(0.5) { 3 } else { 5 },
        dilation: rng.random_range(1..3),
        unary: if rng.random_bool(0.5) {
            UnaryKind::Ciou
        } else {
            UnaryKind::Giou
        },
        detach_means: rng.random_bool(0.5),
        ..EnergyConfig::default()
    };
    let ccfg = ClipConfig {
        grid: rng.random_range(8..13),
        pad: 2,
    };
    Instance {
        img,
        gt,
        poly: Polygon::new(pts).expect("valid polygon"),
        ecfg,
        ccfg,
    }
}

fn sign(v: f64) -> i64 {
    if v > 0.0 {
        1
    } else if v < 0.0 {
        -1
    } else {
        0
    }
}

fn box_signature(poly: &Polygon<f64>, gt: &BBox<f64>, out: &mut Vec<i64>) {
    let ext = bbox_of(poly);
    let a = ext.bbox.as_array();
    let b = gt.as_array();
    out.extend([ext.min_x, ext.min_y, ext.max_x, ext.max_y].map(|i| i as i64));
    out.extend((0..4).map(|i| sign(a[i] - b[i])));
    out.push(sign(a[2].min(b[2]) - a[0].max(b[0])));
    out.push(sign(a[3].min(b[3]) - a[1].max(b[1])));
}

fn field_signature(
    grid_poly: &Polygon<f64>,
    w: usize,
    h: usize,
    tau: f64,
    pairs: &[(u32, u32, f64)],
    out: &mut Vec<i64>,
) {
    for row in 0..h {
        for col in 0..w {
            let p = Point::new(col as f64 + 0.5, row as f64 + 0.5);
            let n = nearest_segment_distance(grid_poly, p);
            let case = match n.case {
                SegmentCase::Before => 0,
                SegmentCase::Interior => 1,
                SegmentCase::After => 2,
            };
            out.extend([
                point_in_polygon(grid_poly, p) as i64,
                n.segment as i64,
                case,
            ]);
        }
    }
    if !pairs.is_empty() {
        let field = MembershipField::build(grid_poly, w, h, tau, false);
        let v = field.values();
        out.extend(
            pairs
                .iter()
                .map(|&(i, j, _)| sign(v[i as usize] - v[j as usize])),
        );
    }
}

/// Compares `grad` with central differences of `value` over the
/// coordinates whose `signature` is stable. Returns `(error, checked,
/// skipped)`.
fn compare(
    x: &[f64],
    grad: &[f64],
    h: f64,
    value: impl Fn(&[f64]) -> f64,
    signature: impl Fn(&[f64]) -> Vec<i64>,
) -> (f64, usize, usize) {
    let base = signature(x);
    let (mut a, mut n) = (Vec::new(), Vec::new());
    let mut skipped = 0;
    let mut probe = x.to_vec();
    for i in 0..x.len() {
        probe[i] = x[i] + h;
        let (fp, sp) = (value(&probe), signature(&probe));
        probe[i] = x[i] - h;
        let (fm, sm) = (value(&probe), signature(&probe));
        probe[i] = x[i];
        if sp != base || sm != base {
            skipped += 1;
            continue;
        }
        a.push(grad[i]);
        n.push((fp - fm) / (2.0 * h));
    }
    if a.is_empty() {
        return (0.0, 0, skipped);
    }
    (relative_error(&a, &n), a.len(), skipped)
}

fn grid_signature(
    w: usize,
    h: usize,
    tau: f64,
    pairs: &[(u32, u32, f64)],
) -> impl Fn(&[f64]) -> Vec<i64> + '_ {
    move |x| {
        let mut s = Vec::new();
        field_signature(&poly_of(x), w, h, tau, pairs, &mut s);
        s
    }
}

fn poly_of(x: &[f64]) -> Polygon<f64> {
    Polygon::from_flat(x).expect("finite perturbation of a valid polygon")
}

fn check_term(
    term: Term,
    inst: &Instance,
    h: f64,
    bias: f64,
    rng: &mut ChaCha8Rng,
) -> (f64, usize, usize) {
    let model = EnergyModel::new(&inst.img, &inst.gt, &inst.ecfg, &inst.ccfg)
        .expect("valid random instance");
    let frame = model.frame();
    let patch = frame.patch();
    let (pw, ph) = (patch.width(), patch.height());
    let tau = inst.ecfg.tau;
    let table = AffinityTable::from_config(patch, &inst.ecfg);
    let no_pairs: &[(u32, u32, f64)] = &[];
    let grid_x = frame.to_grid(&inst.poly).to_flat();
    let image_x = inst.poly.to_flat();

    let grid_sig = |pairs| grid_signature(pw, ph, tau, pairs);

    let (error, checked, skipped) = match term {
        Term::Unary => {
            let kind = inst.ecfg.unary;
            let alpha_c = unary_alpha(&inst.poly, &inst.gt, kind);
            let sig = |x: &[f64]| {
                let mut s = Vec::new();
                box_signature(&poly_of(x), &inst.gt, &mut s);
                s
            };
            let g: Vec<f64> = unary_loss(&inst.poly, &inst.gt, kind)
                .gradient
                .iter()
                .map(|v| v * bias)
                .collect();
            let (e, c, k) = compare(
                &image_x,
                &g,
                h,
                |x| unary_value_frozen(&poly_of(x), &inst.gt, kind, alpha_c),
                sig,
            );
            (e, c, k)
        }
        Term::Membership => {
            let weights: Vec<f64> = (0..pw * ph).map(|_| rng.random_range(-1.0..1.0)).collect();
            let eval = |x: &[f64], with_grad| {
                let field = MembershipField::build(&poly_of(x), pw, ph, tau, with_grad);
                let value: f64 = field
                    .values()
                    .iter()
                    .zip(&weights)
                    .map(|(v, w)| v * w)
                    .sum();
                (field, value)
            };
            let (field, _) = eval(&grid_x, true);
            let mut g = vec![0.0; grid_x.len()];
            for (p, &w) in weights.iter().enumerate() {
                field.grad(p).accumulate(w * bias, &mut g);
            }
            let (e, c, k) = compare(&grid_x, &g, h, |x| eval(x, false).1, grid_sig(no_pairs));
            (e, c, k)
        }
        Term::Local => {
            let f = |x: &[f64], with_grad| {
                let field = MembershipField::build(&poly_of(x), pw, ph, tau, with_grad);
                table
                    .local_loss(&field, inst.ecfg.reduction)
                    .expect("same grid")
            };
            let g: Vec<f64> = f(&grid_x, true).gradient.iter().map(|v| v * bias).collect();
            let (e, c, k) = compare(
                &grid_x,
                &g,
                h,
                |x| f(x, false).value,
                grid_sig(table.pairs()),
            );
            (e, c, k)
        }
        Term::Global => {
            let field_at =
                |x: &[f64], with_grad| MembershipField::build(&poly_of(x), pw, ph, tau, with_grad);
            let base = field_at(&grid_x, true);
            let means = region_means(&base, patch).expect("same grid");
            let g: Vec<f64> = global_pairwise_loss(&base, patch, &inst.ecfg)
                .expect("same grid")
                .gradient
                .iter()
                .map(|v| v * bias)
                .collect();
            let value = |x: &[f64]| {
                let field = field_at(x, false);
                if inst.ecfg.detach_means {
                    global_value_with_means(
                        &field,
                        patch,
                        inst.ecfg.reduction,
                        &means.u_in,
                        &means.u_out,
                    )
                } else {
                    global_pairwise_loss(&field, patch, &inst.ecfg).map(|l| l.value)
                }
                .expect("same grid")
            };
            let (e, c, k) = compare(&grid_x, &g, h, value, grid_sig(no_pairs));
            (e, c, k)
        }
        Term::Total => {
            let frozen = model.frozen_coefficients(&inst.poly).expect("same grid");
            let g: Vec<f64> = model
                .evaluate(&inst.poly, true)
                .expect("same grid")
                .gradient
                .iter()
                .map(|v| v * bias)
                .collect();
            let sig = |x: &[f64]| {
                let p = poly_of(x);
                let mut s = Vec::new();
                box_signature(&p, &inst.gt, &mut s);
                field_signature(&frame.to_grid(&p), pw, ph, tau, table.pairs(), &mut s);
                s
            };
            let value = |x: &[f64]| model.value_frozen(&poly_of(x), &frozen).expect("same grid");
            let (e, c, k) = compare(&image_x, &g, h, value, sig);
            (e, c, k)
        }
    };
    (error, checked, skipped)
}

/// Runs every term on `trials` random instances each.
pub fn run_gradcheck(opts: &GradcheckOptions) -> GradcheckReport {
    let terms = Term::ALL
        .iter()
        .enumerate()
        .map(|(t, &term)| {
            let mut rng =
                ChaCha8Rng::seed_from_u64(opts.seed.wrapping_mul(31).wrapping_add(t as u64));
            let (mut worst, mut checked, mut skipped) = (0.0f64, 0, 0);
            for _ in 0..opts.trials {
                let inst = random_instance(&mut rng);
                let bias = if opts.corrupt == Some(term) { 1.1 } else { 1.0 };
                let (err, c, k) = check_term(term, &inst, opts.step, bias, &mut rng);
                worst = worst.max(err);
                checked += c;
                skipped += k;
            }
            TermReport {
                term,
                trials: opts.trials,
                checked,
                skipped,
                worst,
                passed: worst < opts.tolerance,
            }
        })
        .collect();
    GradcheckReport {
        tolerance: opts.tolerance,
        terms,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_run_passes() {
        let rep = run_gradcheck(&GradcheckOptions {
            trials: 4,
            ..GradcheckOptions::default()
        });
        for t in &rep.terms {
            assert!(t.passed, "{:?}", t);
            assert!(t.checked > 0, "{:?}", t);
        }
    }

    #[test]
    fn zero_trials_pass_vacuously() {
        let rep = run_gradcheck(&GradcheckOptions {
            trials: 0,
            ..GradcheckOptions::default()
        });
        assert!(rep.passed());
        assert!(rep.terms.iter().all(|t| t.checked == 0));
    }

    #[test]
    fn corrupted_term_is_named() {
        let rep = run_gradcheck(&GradcheckOptions {
            trials: 2,
            corrupt: Some(Term::Local),
            ..GradcheckOptions::default()
        });
        assert_eq!(rep.failing(), vec![Term::Local]);
    }
}
