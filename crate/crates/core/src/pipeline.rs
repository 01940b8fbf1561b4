//! Whole-image fitting: settings, flat config files and the
//! annotations-to-results driver.

use std::str::FromStr;

use crate::energy::{EnergyConfig, Reduction, UnaryKind};
use crate::error::{Error, Result};
use crate::formats::{AnnotationFile, InstanceResult, ResultFile};
use crate::image::ImagePatch;
use crate::roi::ClipConfig;
use crate::snake::{evolve_batch, InitKind, SnakeConfig, StepScaling};

/// Everything a fit needs besides the image and the boxes.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct FitSettings {
    pub energy: EnergyConfig,
    pub clip: ClipConfig,
    pub snake: SnakeConfig,
    pub init: InitKind,
}

fn parse<V: FromStr>(key: &str, value: &str) -> Result<V> {
    value
        .parse()
        .map_err(|_| Error::Config(format!("bad value {value:?} for {key}")))
}

impl FitSettings {
    /// Sets one field by name. Keys mirror the config struct fields, with
    /// `k` and `clip` accepted for `vertices` and `grid`.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let (e, c, s) = (&mut self.energy, &mut self.clip, &mut self.snake);
        match key {
            "alpha" => e.alpha = parse(key, value)?,
            "beta" => e.beta = parse(key, value)?,
            "gamma" => e.gamma = parse(key, value)?,
            "tau" => e.tau = parse(key, value)?,
            "sigma_i" => e.sigma_i = parse(key, value)?,
            "window" => e.window = parse(key, value)?,
            "dilation" => e.dilation = parse(key, value)?,
            "detach_means" => e.detach_means = parse(key, value)?,
            "unary" => {
                e.unary = match value {
                    "ciou" => UnaryKind::Ciou,
                    "giou" => UnaryKind::Giou,
                    _ => {
                        return Err(Error::Config(format!(
                            "unary must be ciou or giou, got {value:?}"
                        )))
                    }
                }
            }
            "reduction" => {
                e.reduction = match value {
                    "mean" => Reduction::Mean,
                    "sum" => Reduction::Sum,
                    _ => {
                        return Err(Error::Config(format!(
                            "reduction must be mean or sum, got {value:?}"
                        )))
                    }
                }
            }
            "grid" | "clip" => c.grid = parse(key, value)?,
            "pad" => c.pad = parse(key, value)?,
            "vertices" | "k" => s.vertices = parse(key, value)?,
            "max_iters" => s.max_iters = parse(key, value)?,
            "step" => s.step = parse(key, value)?,
            "backtrack_factor" => s.backtrack_factor = parse(key, value)?,
            "max_halvings" => s.max_halvings = parse(key, value)?,
            "armijo" => s.armijo = parse(key, value)?,
            "resample_every" => s.resample_every = parse(key, value)?,
            "tol" => s.tol = parse(key, value)?,
            "tol_window" => s.tol_window = parse(key, value)?,
            "kink_band" => s.kink_band = parse(key, value)?,
            "seed" => s.seed = parse(key, value)?,
            "scaling" => {
                s.scaling = match value {
                    "global" => StepScaling::Global,
                    "per_vertex" => StepScaling::PerVertex,
                    _ => {
                        return Err(Error::Config(format!(
                            "scaling must be global or per_vertex, got {value:?}"
                        )))
                    }
                }
            }
            "init" => {
                self.init = match value {
                    "ellipse" => InitKind::Ellipse,
                    "square" => InitKind::Square,
                    _ => {
                        return Err(Error::Config(format!(
                            "init must be ellipse or square, got {value:?}"
                        )))
                    }
                }
            }
            _ => return Err(Error::Config(format!("unknown key {key:?}"))),
        }
        Ok(())
    }

    /// Applies a `key = value` file; `#` starts a comment.
    pub fn apply_text(&mut self, text: &str) -> Result<()> {
        for (n, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("line {}: expected key = value", n + 1)))?;
            self.set(k.trim(), v.trim()).map_err(|e| match e {
                Error::Config(m) => Error::Config(format!("line {}: {m}", n + 1)),
                other => other,
            })?;
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        self.energy.validate()?;
        self.clip.validate()?;
        self.snake.validate()
    }
}

/// Fits every annotated instance of `img`. Results are ordered by id;
/// per-instance failures are recorded, not raised.
pub fn fit_annotations(
    img: &ImagePatch<f64>,
    ann: &AnnotationFile,
    settings: &FitSettings,
) -> ResultFile {
    let mut order: Vec<_> = ann.instances.iter().collect();
    order.sort_by_key(|a| a.id);

    let boxes: Vec<_> = order.iter().map(|a| a.to_box()).collect();
    let runnable: Vec<_> = boxes
        .iter()
        .filter_map(|b| b.as_ref().ok())
        .map(|b| (img, *b))
        .collect();
    let mut fits = evolve_batch(
        &runnable,
        &settings.energy,
        &settings.clip,
        &settings.snake,
        settings.init,
    )
    .into_iter();

    let results = order
        .iter()
        .zip(&boxes)
        .map(|(a, b)| {
            let fit = match b {
                Ok(_) => fits.next().expect("one fit per valid box"),
                Err(e) => Err(e.clone()),
            };
            match fit {
                Ok(trace) => InstanceResult {
                    id: a.id,
                    polygon: trace.polygon.to_flat(),
                    energy: Some(trace.final_loss()),
                    iterations: trace.iterations,
                    terminated: Some(trace.termination),
                    error: None,
                },
                Err(e) => InstanceResult::failed(a.id, e.code()),
            }
        })
        .collect();
    ResultFile { results }
}
