//! Fits the synthetic boundary suite with the full loss and with the box
//! term alone, printing mask IoU per shape.

use std::time::Instant;

use boxfit::synthetic::boundary_suite;
use boxfit::{evolve, rasterize_polygon, ClipConfig, EnergyConfig, InitKind, SnakeConfig};

fn main() {
    let mut scfg = SnakeConfig::default();
    if std::env::var("GLOBAL").is_ok() {
        scfg.scaling = boxfit::snake::StepScaling::Global;
    }
    if let Ok(v) = std::env::var("RESAMPLE") {
        scfg.resample_every = v.parse().unwrap();
    }
    if let Ok(v) = std::env::var("STEP") {
        scfg.step = v.parse().unwrap();
    }
    let ccfg = ClipConfig::default();
    let mut full = EnergyConfig::default();
    if std::env::var("MEAN").is_ok() {
        full.reduction = boxfit::Reduction::Mean;
    }
    for (label, ecfg) in [("full", full), ("unary", EnergyConfig::unary_only())] {
        let mut total = 0.0;
        let suite = boundary_suite(0);
        for scene in &suite {
            let t0 = Instant::now();
            let trace = evolve(
                &scene.image,
                &scene.gt,
                &ecfg,
                &ccfg,
                &scfg,
                InitKind::Ellipse,
            )
            .unwrap();
            let mask = rasterize_polygon(&trace.polygon, scene.image.height(), scene.image.width());
            let iou = mask.iou(&scene.mask);
            total += iou;
            println!(
                "{label:>5} {:<15} iou {iou:.4} iters {:>4} {:?} loss {:.5} area/box {:.3} {:.2?}",
                scene.name,
                trace.iterations,
                trace.termination,
                trace.final_loss(),
                trace.polygon.signed_area() / scene.gt.area(),
                t0.elapsed()
            );
        }
        println!("{label:>5} mean iou {:.4}", total / suite.len() as f64);
    }
}
