//! Independent reference implementations shared by the integration tests.
#![allow(dead_code)]

use boxfit::{Point, Polygon};
use rand::Rng;

/// Crossing number of a rightward ray, half-open in y.
pub fn crossing_number(xy: &[(f64, f64)], p: (f64, f64)) -> bool {
    let mut inside = false;
    for i in 0..xy.len() {
        let (a, b) = (xy[i], xy[(i + 1) % xy.len()]);
        if (a.1 > p.1) != (b.1 > p.1) {
            let x = a.0 + (p.1 - a.1) * (b.0 - a.0) / (b.1 - a.1);
            if p.0 < x {
                inside = !inside;
            }
        }
    }
    inside
}

/// Minimum distance from `p` to `n` evenly spaced samples (ends included)
/// of every edge.
pub fn sampled_distance(xy: &[(f64, f64)], p: (f64, f64), n: usize) -> f64 {
    let mut best = f64::INFINITY;
    for i in 0..xy.len() {
        let (a, b) = (xy[i], xy[(i + 1) % xy.len()]);
        for s in 0..=n {
            let t = s as f64 / n as f64;
            let q = (a.0 + t * (b.0 - a.0), a.1 + t * (b.1 - a.1));
            best = best.min((q.0 - p.0).hypot(q.1 - p.1));
        }
    }
    best
}

/// Any closed polyline with vertices uniform in `[0, size)^2`.
pub fn random_xy(rng: &mut impl Rng, k: usize, size: f64) -> Vec<(f64, f64)> {
    (0..k)
        .map(|_| (rng.random_range(0.0..size), rng.random_range(0.0..size)))
        .collect()
}

/// Star-shaped polygon around `c` with radii in `[r_min, r_max]`.
pub fn random_star(
    rng: &mut impl Rng,
    c: (f64, f64),
    k: usize,
    r_min: f64,
    r_max: f64,
) -> Polygon<f64> {
    let phase = rng.random_range(0.0..std::f64::consts::TAU);
    let pts = (0..k)
        .map(|j| {
            let a = phase + std::f64::consts::TAU * j as f64 / k as f64;
            let r = rng.random_range(r_min..r_max);
            Point::new(c.0 + r * a.cos(), c.1 + r * a.sin())
        })
        .collect();
    Polygon::new(pts).unwrap()
}

pub fn shoelace(xy: &[(f64, f64)]) -> f64 {
    let n = xy.len();
    (0..n)
        .map(|i| xy[i].0 * xy[(i + 1) % n].1 - xy[(i + 1) % n].0 * xy[i].1)
        .sum::<f64>()
        / 2.0
}

pub fn xy_of(poly: &Polygon<f64>) -> Vec<(f64, f64)> {
    poly.vertices().iter().map(|p| (p.x, p.y)).collect()
}
