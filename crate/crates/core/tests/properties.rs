mod common;

use approx::assert_relative_eq;
use boxfit::energy::{discrete_local_energy, local_pairwise_loss, unary_loss, UnaryKind};
use boxfit::polygeom::{
    bbox_of, init_ellipse, nearest_segment_distance, point_in_polygon, resample_uniform,
};
use boxfit::snake::descend;
use boxfit::{
    rasterize_polygon, BBox, ClipConfig, EnergyConfig, EnergyModel, ImagePatch, Point, Polygon,
    SnakeConfig,
};
use common::{crossing_number, random_star, sampled_distance, shoelace, xy_of};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn coords(k: std::ops::Range<usize>, size: f64) -> impl Strategy<Value = Vec<(f64, f64)>> {
    prop::collection::vec((0.0..size, 0.0..size), k)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn pip_matches_crossing_number(xy in coords(3..12, 10.0), px in 0.0..10.0f64, py in 0.0..10.0f64) {
        let poly = Polygon::from_xy(&xy).unwrap();
        prop_assert_eq!(point_in_polygon(&poly, Point::new(px, py)), crossing_number(&xy, (px, py)));
    }

    #[test]
    fn distance_matches_dense_sampling(xy in coords(3..8, 12.0), px in -2.0..14.0f64, py in -2.0..14.0f64) {
        let poly = Polygon::from_xy(&xy).unwrap();
        let d = nearest_segment_distance(&poly, Point::new(px, py)).distance;
        let s = sampled_distance(&xy, (px, py), 2000);
        // Sampling can only overestimate, by at most half a sample spacing.
        prop_assert!(d <= s + 1e-12);
        prop_assert!(s - d < 0.02, "{} vs {}", d, s);
    }

    #[test]
    fn unary_ignores_non_extreme_vertices(seed in 0u64..10_000, dx in -0.05..0.05f64, dy in -0.05..0.05f64) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let poly = random_star(&mut rng, (20.0, 20.0), 12, 5.0, 10.0);
        let gt = BBox::new(9.0, 11.0, 31.0, 28.0).unwrap();
        let ext = bbox_of(&poly);
        let base = unary_loss(&poly, &gt, UnaryKind::Ciou);
        let margin = |i: usize| {
            let p = poly.vertices()[i];
            let b = ext.bbox;
            (p.x - b.x1).min(b.x2 - p.x).min(p.y - b.y1).min(b.y2 - p.y)
        };
        for i in 0..poly.len() {
            if [ext.min_x, ext.min_y, ext.max_x, ext.max_y].contains(&i) || margin(i) < 0.1 {
                continue;
            }
            let mut flat = poly.to_flat();
            flat[2 * i] += dx;
            flat[2 * i + 1] += dy;
            let moved = unary_loss(&Polygon::from_flat(&flat).unwrap(), &gt, UnaryKind::Ciou);
            prop_assert_eq!(moved.value, base.value);
            prop_assert_eq!(moved.gradient[2 * i], 0.0);
        }
    }
}

#[test]
fn resampling_preserves_area() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..50 {
        // Dense smooth-ish stars: resampling at the same count barely moves area.
        let poly = random_star(&mut rng, (0.0, 0.0), 64, 9.0, 10.0);
        let r = resample_uniform(&poly, 64).unwrap();
        let (a, b) = (shoelace(&xy_of(&poly)), shoelace(&xy_of(&r)));
        assert!(((b - a) / a).abs() < 5e-3, "{a} {b}");
    }
}

#[test]
fn raster_area_matches_shoelace() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    for _ in 0..10 {
        let poly = random_star(&mut rng, (128.0, 128.0), 12, 40.0, 120.0);
        let mask = rasterize_polygon(&poly, 256, 256);
        let area = shoelace(&xy_of(&poly)).abs();
        assert_relative_eq!(mask.count() as f64, area, max_relative = 0.02);
    }
}

#[test]
fn relaxed_local_term_approaches_discrete_energy() {
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    let img = boxfit::synthetic::noise_image(20, 20, 4);
    let cfg = EnergyConfig {
        tau: 1e-3,
        ..EnergyConfig::default()
    };
    let mut tested = 0;
    while tested < 20 {
        let poly = random_star(&mut rng, (10.0, 10.0), 9, 3.0, 8.5);
        let clear = (0..400).all(|i| {
            let p = Point::new((i % 20) as f64 + 0.5, (i / 20) as f64 + 0.5);
            nearest_segment_distance(&poly, p).distance > 0.1
        });
        if !clear {
            continue;
        }
        tested += 1;
        let field = boxfit::energy::relaxed_field(&poly, 20, 20, 1e-3);
        let relaxed = local_pairwise_loss(&field, &img, &cfg).unwrap().value;
        let discrete = discrete_local_energy(&poly, &img, &cfg);
        assert!(
            (relaxed - discrete).abs() / discrete.max(1.0) < 1e-3,
            "{relaxed} {discrete}"
        );
    }
}

#[test]
fn unary_descent_from_perturbed_starts() {
    let mut rng = ChaCha8Rng::seed_from_u64(14);
    let img = ImagePatch::constant(96, 96, [0.3, 0.3, 0.3]);
    for _ in 0..5 {
        use rand::Rng;
        let gt = BBox::from_xywh(
            rng.random_range(5.0..30.0),
            rng.random_range(5.0..30.0),
            40.0,
            30.0,
        )
        .unwrap();
        let mut jitter = |v: f64| v + rng.random_range(-6.0..6.0);
        let start_box =
            BBox::new(jitter(gt.x1), jitter(gt.y1), jitter(gt.x2), jitter(gt.y2)).unwrap();
        let model = EnergyModel::new(
            &img,
            &gt,
            &EnergyConfig::unary_only(),
            &ClipConfig::default(),
        )
        .unwrap();
        let scfg = SnakeConfig {
            resample_every: 0,
            ..SnakeConfig::default()
        };
        let tr = descend(&model, init_ellipse(&start_box, 32).unwrap(), &scfg);
        assert!(
            bbox_of(&tr.polygon).bbox.iou(&gt) >= 0.99,
            "{:?} vs {:?} from {:?}: {:?} after {}",
            bbox_of(&tr.polygon).bbox,
            gt,
            start_box,
            tr.termination,
            tr.iterations
        );
        assert!(tr.losses.windows(2).all(|w| w[1].total <= w[0].total));
    }
}
