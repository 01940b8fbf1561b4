//! Contour evolution: gradient descent with Armijo backtracking on the
//! total loss, steps measured in clip-grid pixels.

use serde::{Deserialize, Serialize};

use crate::energy::{unary_side_slopes, EnergyConfig, EnergyModel, TotalLoss};
use crate::error::{Error, Result};
use crate::image::ImagePatch;
use crate::polygeom::{bbox_of, init_ellipse, init_square, resample_uniform, BBox, Point, Polygon};
use crate::roi::ClipConfig;
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum InitKind {
    #[default]
    Ellipse,
    Square,
}

impl InitKind {
    pub fn build<T: Scalar>(self, bbox: &BBox<T>, k: usize) -> Result<Polygon<T>> {
        match self {
            InitKind::Ellipse => init_ellipse(bbox, k),
            InitKind::Square => init_square(bbox, k),
        }
    }
}

/// How the raw gradient is turned into a search direction.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StepScaling {
    /// Whole gradient scaled so the fastest vertex moves one unit.
    Global,
    /// Every vertex moves one unit along its own gradient.
    #[default]
    PerVertex,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SnakeConfig {
    /// Vertex count of the initial polygon.
    pub vertices: usize,
    pub max_iters: usize,
    /// Initial trial displacement per iteration, in grid pixels. Zero
    /// freezes the polygon.
    pub step: f64,
    pub backtrack_factor: f64,
    pub max_halvings: usize,
    pub armijo: f64,
    /// Resample to uniform arc-length spacing every this many iterations
    /// (0 disables).
    pub resample_every: usize,
    /// Converged once no vertex moved more than this (grid pixels) over the
    /// last `tol_window` iterations.
    pub tol: f64,
    pub tol_window: usize,
    pub scaling: StepScaling,
    /// Extreme vertices closer than this (grid pixels) to their box side
    /// are treated as sitting on the box-loss kink.
    pub kink_band: f64,
    /// Recorded in the trace; the descent itself is deterministic.
    pub seed: u64,
}

impl Default for SnakeConfig {
    fn default() -> Self {
        Self {
            vertices: 64,
            max_iters: 1000,
            step: 0.5,
            backtrack_factor: 0.5,
            max_halvings: 20,
            armijo: 1e-4,
            resample_every: 50,
            tol: 1e-3,
            tol_window: 10,
            scaling: StepScaling::PerVertex,
            kink_band: 1e-6,
            seed: 0,
        }
    }
}

impl SnakeConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::Config(m.to_string()));
        if self.vertices < 3 {
            return bad("vertices must be >= 3");
        }
        if self.max_iters < 1 {
            return bad("max_iters must be >= 1");
        }
        if !(self.step >= 0.0 && self.step.is_finite()) {
            return bad("step must be finite and >= 0");
        }
        if !(self.backtrack_factor > 0.0 && self.backtrack_factor < 1.0) {
            return bad("backtrack_factor must be in (0, 1)");
        }
        if !(self.armijo > 0.0 && self.armijo < 1.0) {
            return bad("armijo constant must be in (0, 1)");
        }
        if !(self.kink_band >= 0.0) {
            return bad("kink_band must be >= 0");
        }
        if !(self.tol > 0.0) || self.tol_window < 1 {
            return bad("tol must be positive with a window of at least one iteration");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Termination {
    Converged,
    MaxIters,
    LineSearchFailed,
}

impl Termination {
    pub fn as_str(self) -> &'static str {
        match self {
            Termination::Converged => "converged",
            Termination::MaxIters => "max_iters",
            Termination::LineSearchFailed => "line_search_failed",
        }
    }
}

/// Loss breakdown at one iterate (components unweighted).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossRecord<T> {
    pub total: T,
    pub unary: T,
    pub local: T,
    pub global: T,
}

impl<T: Scalar> From<&TotalLoss<T>> for LossRecord<T> {
    fn from(t: &TotalLoss<T>) -> Self {
        Self {
            total: t.value,
            unary: t.unary.value,
            local: t.local.value,
            global: t.global.value,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SnakeTrace<T> {
    /// Loss at the initial polygon followed by one entry per iteration.
    pub losses: Vec<LossRecord<T>>,
    /// Indices into `losses` of entries recorded right after a resampling.
    pub resampled_at: Vec<usize>,
    /// Final polygon in image coordinates.
    pub polygon: Polygon<T>,
    pub iterations: usize,
    pub termination: Termination,
    pub seed: u64,
}

impl<T: Scalar> SnakeTrace<T> {
    pub fn final_loss(&self) -> T {
        self.losses.last().map(|l| l.total).unwrap_or_else(T::nan)
    }

    /// Whether the total loss never increased between resampling events.
    pub fn is_monotone(&self) -> bool {
        self.losses
            .windows(2)
            .enumerate()
            .all(|(i, w)| w[1].total <= w[0].total || self.resampled_at.contains(&(i + 1)))
    }
}

fn search_direction<T: Scalar>(grad: &[T], scaling: StepScaling) -> Vec<T> {
    let norms: Vec<T> = grad.chunks_exact(2).map(|g| g[0].hypot(g[1])).collect();
    match scaling {
        StepScaling::Global => {
            let max = norms.iter().fold(T::zero(), |m, &n| m.max(n));
            if max > T::zero() {
                grad.iter().map(|&g| -g / max).collect()
            } else {
                vec![T::zero(); grad.len()]
            }
        }
        StepScaling::PerVertex => grad
            .chunks_exact(2)
            .zip(&norms)
            .flat_map(|(g, &n)| {
                if n > T::zero() {
                    [-g[0] / n, -g[1] / n]
                } else {
                    [T::zero(); 2]
                }
            })
            .collect(),
    }
}

/// Grid-frame descent gradient. Each box side's gradient is shared evenly by
/// all vertices within `tie_band` of the extreme, so near-tied extremes move
/// together. When the extreme sits on its box side (within `band`), those
/// vertices get the minimum-norm element of the subdifferential instead of
/// a one-sided derivative.
fn kink_aware_gradient<T: Scalar>(
    model: &EnergyModel<T>,
    poly: &Polygon<T>,
    loss: &TotalLoss<T>,
    band: T,
    tie_band: T,
) -> Vec<T> {
    let frame = model.frame();
    let mut grad = frame.gradient_to_grid(&loss.gradient);
    let alpha = T::lit(model.config().alpha);
    let ext = bbox_of(poly);
    if alpha <= T::zero() || !ext.bbox.has_positive_area() {
        return grad;
    }
    let unary: Vec<T> = frame
        .gradient_to_grid(&loss.unary.gradient)
        .into_iter()
        .map(|g| alpha * g)
        .collect();
    // Pairwise part alone; the unary part is redistributed below.
    for (g, u) in grad.iter_mut().zip(&unary) {
        *g = *g - *u;
    }
    let grid_poly = frame.to_grid(poly);
    let coord = |i: usize, axis: usize| {
        let p = grid_poly.vertices()[i];
        if axis == 0 {
            p.x
        } else {
            p.y
        }
    };
    let walls = box_walls(model);
    let extremes = [ext.min_x, ext.min_y, ext.max_x, ext.max_y];
    for (side, &v) in extremes.iter().enumerate() {
        let axis = side % 2;
        let c = coord(v, axis);
        let active: Vec<usize> = (0..grid_poly.len())
            .filter(|&i| (coord(i, axis) - c).abs() <= tie_band)
            .collect();
        if (c - walls[side]).abs() > band {
            let share = unary[2 * v + axis] / T::from_usize_lossy(active.len());
            for &i in &active {
                grad[2 * i + axis] = grad[2 * i + axis] + share;
            }
            continue;
        }
        let s = frame.scale()[axis];
        let (below, above) = unary_side_slopes(&ext.bbox, model.gt(), model.config().unary, side);
        for &i in &active {
            let rest = grad[2 * i + axis];
            let (lo, hi) = (rest + alpha * below / s, rest + alpha * above / s);
            grad[2 * i + axis] = if lo > T::zero() {
                lo
            } else if hi < T::zero() {
                hi
            } else {
                T::zero()
            };
        }
    }
    grad
}

/// Box sides `x1, y1, x2, y2` in grid coordinates.
fn box_walls<T: Scalar>(model: &EnergyModel<T>) -> [T; 4] {
    let gt = model.gt();
    let lo = model.frame().point_to_grid(Point::new(gt.x1, gt.y1));
    let hi = model.frame().point_to_grid(Point::new(gt.x2, gt.y2));
    [lo.x, lo.y, hi.x, hi.y]
}

/// Shortens direction components so that a full step never carries a
/// vertex across a box side: inside vertices stop at the wall, outside
/// vertices stop when they reach it.
fn clip_at_walls<T: Scalar>(model: &EnergyModel<T>, poly: &Polygon<T>, dir: &mut [T], step: T) {
    if step <= T::zero() {
        return;
    }
    let grid_poly = model.frame().to_grid(poly);
    let walls = box_walls(model);
    for (i, p) in grid_poly.vertices().iter().enumerate() {
        for side in 0..4 {
            let axis = side % 2;
            let sign = if side < 2 { -T::one() } else { T::one() };
            let c = if axis == 0 { p.x } else { p.y };
            // Positive outside the box.
            let out = sign * (c - walls[side]);
            let d = &mut dir[2 * i + axis];
            let move_out = sign * *d * step;
            if move_out > T::zero() {
                if out >= T::zero() {
                    *d = T::zero();
                } else if move_out > -out {
                    *d = -out * sign / step;
                }
            } else if move_out < T::zero() && out > T::zero() && -move_out > out {
                *d = -out * sign / step;
            }
        }
    }
}

fn check_instance<T: Scalar>(img: &ImagePatch<T>, gt: &BBox<T>) -> Result<()> {
    if !gt.has_positive_area() {
        return Err(Error::DegenerateBox);
    }
    let (w, h) = (
        T::from_usize_lossy(img.width()),
        T::from_usize_lossy(img.height()),
    );
    if gt.x2 <= T::zero() || gt.y2 <= T::zero() || gt.x1 >= w || gt.y1 >= h {
        return Err(Error::BoxOutOfImage);
    }
    Ok(())
}

/// Fits a polygon to the object in `gt`, starting from `init`.
pub fn evolve<T: Scalar>(
    img: &ImagePatch<T>,
    gt: &BBox<T>,
    ecfg: &EnergyConfig,
    ccfg: &ClipConfig,
    scfg: &SnakeConfig,
    init: InitKind,
) -> Result<SnakeTrace<T>> {
    scfg.validate()?;
    check_instance(img, gt)?;
    let model = EnergyModel::new(img, gt, ecfg, ccfg)?;
    let start = init.build(gt, scfg.vertices)?;
    Ok(descend(&model, start, scfg))
}

/// Runs the descent loop from an explicit image-frame polygon.
pub fn descend<T: Scalar>(
    model: &EnergyModel<T>,
    start: Polygon<T>,
    scfg: &SnakeConfig,
) -> SnakeTrace<T> {
    let frame = model.frame();
    let step = T::lit(scfg.step);
    let factor = T::lit(scfg.backtrack_factor);
    let armijo = T::lit(scfg.armijo);
    let tol = T::lit(scfg.tol);
    let band = T::lit(scfg.kink_band);

    let evaluate = |p: &Polygon<T>, g: bool| {
        model
            .evaluate(p, g)
            .expect("model grid matches its own patch")
    };
    let mut poly = start;
    let mut current = evaluate(&poly, true);
    let mut losses = vec![LossRecord::from(&current)];
    let mut resampled_at = Vec::new();
    // Grid-frame positions of recent iterates for the convergence test.
    let mut history: Vec<Polygon<T>> = vec![frame.to_grid(&poly)];
    let mut termination = Termination::MaxIters;
    let mut iterations = 0;
    // Last accepted step; each line search may start one expansion above it.
    let mut last_t = step;

    for iter in 0..scfg.max_iters {
        if scfg.resample_every > 0 && iter > 0 && iter % scfg.resample_every == 0 {
            if let Ok(r) = resample_uniform(&poly, poly.len()) {
                poly = r;
                current = evaluate(&poly, true);
                history.clear();
                history.push(frame.to_grid(&poly));
                resampled_at.push(losses.len());
                losses.push(LossRecord::from(&current));
            }
        }

        let grad_grid = kink_aware_gradient(model, &poly, &current, band, step);
        let mut dir_grid = search_direction(&grad_grid, scfg.scaling);
        if model.config().alpha > 0.0 {
            clip_at_walls(model, &poly, &mut dir_grid, step);
        }
        let slope = grad_grid
            .iter()
            .zip(&dir_grid)
            .fold(T::zero(), |s, (&g, &d)| s + g * d);
        if !(slope < T::zero()) && step > T::zero() {
            termination = Termination::Converged;
            break;
        }
        let dir_image = frame.displacement_from_grid(&dir_grid);

        let mut t = (last_t / factor).min(step);
        let mut accepted = None;
        for attempt in 0..=scfg.max_halvings {
            let cand = match poly.displaced(&dir_image, t) {
                Ok(c) => c,
                Err(_) => {
                    t = t * factor;
                    continue;
                }
            };
            // The first trial usually succeeds, so pay for its gradient up front.
            let eval = evaluate(&cand, attempt == 0);
            if eval.value <= current.value + armijo * t * slope {
                accepted = Some((cand, eval, attempt == 0));
                break;
            }
            t = t * factor;
        }
        let Some((cand, eval, has_grad)) = accepted else {
            termination = Termination::LineSearchFailed;
            break;
        };
        poly = cand;
        last_t = t;
        current = if has_grad {
            eval
        } else {
            evaluate(&poly, true)
        };
        losses.push(LossRecord::from(&current));
        iterations = iter + 1;

        let grid_now = frame.to_grid(&poly);
        history.push(grid_now);
        if history.len() > scfg.tol_window + 1 {
            history.remove(0);
        }
        if history.len() == scfg.tol_window + 1 {
            let moved = history[0]
                .vertices()
                .iter()
                .zip(history[scfg.tol_window].vertices())
                .fold(T::zero(), |m, (a, b)| m.max(b.sub(*a).norm()));
            if moved < tol {
                termination = Termination::Converged;
                break;
            }
        }
    }

    SnakeTrace {
        losses,
        resampled_at,
        polygon: poly,
        iterations,
        termination,
        seed: scfg.seed,
    }
}

/// Independent fits for several instances; results keep the input order
/// and match sequential [`evolve`] calls exactly.
pub fn evolve_batch<T: Scalar>(
    instances: &[(&ImagePatch<T>, BBox<T>)],
    ecfg: &EnergyConfig,
    ccfg: &ClipConfig,
    scfg: &SnakeConfig,
    init: InitKind,
) -> Vec<Result<SnakeTrace<T>>> {
    let threads = std::thread::available_parallelism()
        .map(|n| n.get())
        .unwrap_or(1)
        .min(instances.len().max(1));
    if threads <= 1 {
        return instances
            .iter()
            .map(|(img, gt)| evolve(img, gt, ecfg, ccfg, scfg, init))
            .collect();
    }
    let chunk = instances.len().div_ceil(threads);
    std::thread::scope(|s| {
        let handles: Vec<_> = instances
            .chunks(chunk)
            .map(|part| {
                s.spawn(move || {
                    part.iter()
                        .map(|(img, gt)| evolve(img, gt, ecfg, ccfg, scfg, init))
                        .collect::<Vec<_>>()
                })
            })
            .collect();
        handles
            .into_iter()
            .flat_map(|h| h.join().expect("evolution thread panicked"))
            .collect()
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::polygeom::bbox_of;
    use crate::raster::rasterize_polygon;
    use crate::synthetic::{render, Scene, Shape};

    fn disk_scene() -> Scene {
        Scene::new(
            "disk",
            Shape::Disk {
                center: Point::new(36.0, 36.0),
                radius: 20.0,
            },
            72,
            0.0,
            0,
        )
    }

    #[test]
    fn zero_step_returns_the_initialization() {
        let s = disk_scene();
        let scfg = SnakeConfig {
            max_iters: 1,
            step: 0.0,
            ..SnakeConfig::default()
        };
        let tr = evolve(
            &s.image,
            &s.gt,
            &EnergyConfig::default(),
            &ClipConfig::default(),
            &scfg,
            InitKind::Ellipse,
        )
        .unwrap();
        assert_eq!(tr.polygon, init_ellipse(&s.gt, 64).unwrap());
    }

    #[test]
    fn fits_a_disk() {
        let s = disk_scene();
        let tr = evolve(
            &s.image,
            &s.gt,
            &EnergyConfig::default(),
            &ClipConfig::default(),
            &SnakeConfig::default(),
            InitKind::Ellipse,
        )
        .unwrap();
        assert!(tr.iterations <= 1000);
        let iou = rasterize_polygon(&tr.polygon, 72, 72).iou(&s.mask);
        assert!(iou >= 0.9, "iou {iou}");
    }

    #[test]
    fn monotone_without_resampling() {
        let s = Scene::new(
            "square",
            Shape::RotatedSquare {
                center: Point::new(32.0, 32.0),
                half_side: 13.0,
                angle: 0.5,
            },
            64,
            0.02,
            3,
        );
        let scfg = SnakeConfig {
            resample_every: 0,
            max_iters: 200,
            ..SnakeConfig::default()
        };
        let tr = evolve(
            &s.image,
            &s.gt,
            &EnergyConfig::default(),
            &ClipConfig::default(),
            &scfg,
            InitKind::Square,
        )
        .unwrap();
        assert!(tr.losses.windows(2).all(|w| w[1].total <= w[0].total));
        assert!(tr.losses.last().unwrap().total < tr.losses[0].total);
    }

    #[test]
    fn unary_descent_recovers_the_box() {
        let gt = BBox::new(8.0, 8.0, 56.0, 56.0).unwrap();
        let model = EnergyModel::new(
            &ImagePatch::constant(64, 64, [0.5; 3]),
            &gt,
            &EnergyConfig::unary_only(),
            &ClipConfig::default(),
        )
        .unwrap();
        let start = init_ellipse(&BBox::new(14.0, 11.0, 47.0, 50.0).unwrap(), 32).unwrap();
        let tr = descend(&model, start, &SnakeConfig::default());
        assert!(
            bbox_of(&tr.polygon).bbox.iou(&gt) >= 0.99,
            "{:?}",
            bbox_of(&tr.polygon).bbox
        );
        assert!(tr.is_monotone());
    }

    #[test]
    fn line_search_failure_at_start_keeps_the_initialization() {
        let s = disk_scene();
        let ecfg = EnergyConfig {
            alpha: 0.0,
            ..EnergyConfig::default()
        };
        let model = EnergyModel::new(&s.image, &s.gt, &ecfg, &ClipConfig::default()).unwrap();
        let start = init_ellipse(&BBox::new(10.0, 12.0, 44.0, 40.0).unwrap(), 16).unwrap();
        let scfg = SnakeConfig {
            step: 1e4,
            max_halvings: 0,
            armijo: 0.5,
            ..SnakeConfig::default()
        };
        let tr = descend(&model, start.clone(), &scfg);
        assert_eq!(tr.termination, Termination::LineSearchFailed);
        assert_eq!(tr.iterations, 0);
        assert_eq!(tr.polygon, start);
    }

    #[test]
    fn deterministic_and_batch_matches_sequential() {
        let img = render(
            &[
                Shape::Disk {
                    center: Point::new(20.0, 20.0),
                    radius: 10.0,
                },
                Shape::Disk {
                    center: Point::new(58.0, 44.0),
                    radius: 13.0,
                },
            ],
            80,
            64,
            0.02,
            9,
        );
        let boxes = [
            BBox::new(10.0, 10.0, 30.0, 30.0).unwrap(),
            BBox::new(45.0, 31.0, 71.0, 57.0).unwrap(),
        ];
        let (e, c) = (EnergyConfig::default(), ClipConfig { grid: 32, pad: 4 });
        let s = SnakeConfig {
            max_iters: 60,
            ..SnakeConfig::default()
        };
        let seq: Vec<_> = boxes
            .iter()
            .map(|b| evolve(&img, b, &e, &c, &s, InitKind::Ellipse).unwrap())
            .collect();
        let again = evolve(&img, &boxes[0], &e, &c, &s, InitKind::Ellipse).unwrap();
        assert_eq!(seq[0], again);

        let batch: Vec<_> = evolve_batch(
            &[(&img, boxes[0]), (&img, boxes[1])],
            &e,
            &c,
            &s,
            InitKind::Ellipse,
        )
        .into_iter()
        .map(|r| r.unwrap())
        .collect();
        assert_eq!(batch, seq);
        let swapped = evolve_batch(
            &[(&img, boxes[1]), (&img, boxes[0])],
            &e,
            &c,
            &s,
            InitKind::Ellipse,
        );
        assert_eq!(swapped[0].as_ref().unwrap(), &seq[1]);
        assert_eq!(swapped[1].as_ref().unwrap(), &seq[0]);
    }

    #[test]
    fn rejects_boxes_outside_the_image() {
        let img = ImagePatch::constant(32, 32, [0.0; 3]);
        let gt = BBox::new(40.0, 2.0, 50.0, 10.0).unwrap();
        let r = evolve(
            &img,
            &gt,
            &EnergyConfig::default(),
            &ClipConfig::default(),
            &SnakeConfig::default(),
            InitKind::Ellipse,
        );
        assert!(matches!(r, Err(Error::BoxOutOfImage)));
    }
}
