//! On-disk artifacts: box annotations, fit results and evaluation reports.
//! All three are JSON documents.

use std::collections::HashSet;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::polygeom::{BBox, Polygon};
use crate::raster::{rasterize_polygon, Mask};
use crate::snake::Termination;

/// Problem with an input document; `line` is 1-based when known.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FormatError {
    pub line: Option<usize>,
    pub message: String,
}

impl fmt::Display for FormatError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.line {
            Some(l) => write!(f, "line {l}: {}", self.message),
            None => f.write_str(&self.message),
        }
    }
}

impl std::error::Error for FormatError {}

impl From<serde_json::Error> for FormatError {
    fn from(e: serde_json::Error) -> Self {
        let line = (e.line() > 0).then_some(e.line());
        Self {
            line,
            message: e.to_string(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Annotation {
    pub id: u64,
    /// `[x, y, width, height]` in pixels.
    pub bbox: [f64; 4],
}

impl Annotation {
    pub fn to_box(&self) -> crate::Result<BBox<f64>> {
        let [x, y, w, h] = self.bbox;
        BBox::from_xywh(x, y, w, h)
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnnotationFile {
    pub instances: Vec<Annotation>,
}

impl AnnotationFile {
    pub fn parse(text: &str) -> Result<Self, FormatError> {
        let file: Self = serde_json::from_str(text)?;
        let mut seen = HashSet::new();
        for a in &file.instances {
            let fail = |message: String| FormatError {
                line: id_line(text, a.id),
                message,
            };
            if !seen.insert(a.id) {
                return Err(fail(format!("duplicate instance id {}", a.id)));
            }
            let [x, y, w, h] = a.bbox;
            if ![x, y, w, h].iter().all(|v| v.is_finite()) {
                return Err(fail(format!(
                    "instance {}: bbox has non-finite values",
                    a.id
                )));
            }
            if !(w > 0.0 && h > 0.0) {
                return Err(fail(format!(
                    "instance {}: bbox width and height must be positive",
                    a.id
                )));
            }
        }
        Ok(file)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("annotations serialize")
    }
}

/// First line holding `"id": <id>`, for diagnostics.
fn id_line(text: &str, id: u64) -> Option<usize> {
    let needle = id.to_string();
    text.lines()
        .position(|line| {
            line.match_indices("\"id\"").any(|(at, key)| {
                let rest = line[at + key.len()..].trim_start();
                rest.strip_prefix(':').is_some_and(|v| {
                    let v = v.trim_start();
                    v.starts_with(&needle)
                        && !v[needle.len()..].starts_with(|c: char| c.is_ascii_digit())
                })
            })
        })
        .map(|i| i + 1)
}

/// Outcome for one instance. Failed instances carry `error` and an empty
/// polygon.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InstanceResult {
    pub id: u64,
    /// `[x1, y1, ..., xK, yK]` in image coordinates.
    pub polygon: Vec<f64>,
    pub energy: Option<f64>,
    pub iterations: usize,
    pub terminated: Option<Termination>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

impl InstanceResult {
    pub fn failed(id: u64, code: &str) -> Self {
        Self {
            id,
            polygon: Vec::new(),
            energy: None,
            iterations: 0,
            terminated: None,
            error: Some(code.to_string()),
        }
    }

    pub fn polygon(&self) -> Option<Polygon<f64>> {
        Polygon::from_flat(&self.polygon).ok()
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct ResultFile {
    pub results: Vec<InstanceResult>,
}

impl ResultFile {
    pub fn parse(text: &str) -> Result<Self, FormatError> {
        let file: Self = serde_json::from_str(text)?;
        for r in &file.results {
            if r.error.is_some() {
                continue;
            }
            let ok = r.polygon.len() >= 6
                && r.polygon.len() % 2 == 0
                && r.polygon.iter().all(|v| v.is_finite())
                && r.energy.is_some_and(f64::is_finite);
            if !ok {
                return Err(FormatError {
                    line: id_line(text, r.id),
                    message: format!("instance {}: polygon must hold 2K >= 6 finite values", r.id),
                });
            }
        }
        Ok(file)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("results serialize")
    }

    /// SVG overlay with one closed path per fitted instance.
    pub fn to_svg(&self, width: usize, height: usize) -> String {
        let mut out = format!(
            "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{width}\" height=\"{height}\" viewBox=\"0 0 {width} {height}\">\n"
        );
        for r in self.results.iter().filter(|r| r.error.is_none()) {
            let mut d = String::new();
            for (i, xy) in r.polygon.chunks_exact(2).enumerate() {
                d.push_str(if i == 0 { "M" } else { " L" });
                d.push_str(&format!("{} {}", xy[0], xy[1]));
            }
            out.push_str(&format!(
                "  <path data-id=\"{}\" d=\"{d} Z\" fill=\"none\" stroke=\"#ff3030\" stroke-width=\"1\"/>\n",
                r.id
            ));
        }
        out.push_str("</svg>\n");
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalEntry {
    pub id: u64,
    pub iou: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub instances: Vec<EvalEntry>,
    /// Mean over instances with an IoU; `None` if there are none.
    pub mean_iou: Option<f64>,
    pub evaluated: usize,
    pub failed: usize,
}

impl EvalReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

/// Scores every prediction against the mask returned by `mask_for`.
/// Missing masks give `missing_gt`, failed fits `no_prediction`.
pub fn evaluate_predictions(
    pred: &ResultFile,
    mut mask_for: impl FnMut(u64) -> Option<Mask>,
) -> EvalReport {
    let instances: Vec<EvalEntry> = pred
        .results
        .iter()
        .map(|r| {
            let entry = |iou, error: Option<&str>| EvalEntry {
                id: r.id,
                iou,
                error: error.map(str::to_string),
            };
            let Some(mask) = mask_for(r.id) else {
                return entry(None, Some("missing_gt"));
            };
            match r.polygon() {
                Some(poly) if r.error.is_none() => entry(
                    Some(rasterize_polygon(&poly, mask.height(), mask.width()).iou(&mask)),
                    None,
                ),
                _ => entry(None, Some("no_prediction")),
            }
        })
        .collect();
    let scores: Vec<f64> = instances.iter().filter_map(|e| e.iou).collect();
    let mean_iou = (!scores.is_empty()).then(|| scores.iter().sum::<f64>() / scores.len() as f64);
    EvalReport {
        evaluated: scores.len(),
        failed: instances.len() - scores.len(),
        instances,
        mean_iou,
    }
}
