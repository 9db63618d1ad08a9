mod common;

use nalgebra::{Matrix2, Rotation2};
use proptest::prelude::*;
use segloc::geometry::{Point3, RigidTransform};
use segloc::mask_pipeline::{
    depth_from_disparity, disparity_of, elongation_ratio, estimate_size, filter_masks, project_detection, CameraModel,
    MaskFilterConfig, MaskObservation,
};

const WIDTH: u32 = 1280;
const HEIGHT: u32 = 720;

fn camera() -> CameraModel {
    CameraModel::pinhole(1250.0, 0.162, WIDTH, HEIGHT, RigidTransform::identity()).unwrap()
}

fn mask_with_cov(lmax: f64, lmin: f64, angle: f64, centroid: [f64; 2]) -> MaskObservation {
    let r = Rotation2::new(angle).into_inner();
    let cov = r * Matrix2::new(lmax, 0.0, 0.0, lmin) * r.transpose();
    let cov = 0.5 * (cov + cov.transpose());
    MaskObservation::new(centroid, 100, cov, false).unwrap()
}

#[test]
fn disc_size_matches_half_radius_spread() {
    // a uniform disc of radius r has per-axis variance r²/4
    let cam = camera();
    for (r, depth) in [(10.0, 2.0), (20.0, 3.0), (35.0, 6.5)] {
        let pixels = common::raster_ellipse(640.0, 360.0, r, r, 0.0);
        let mask = MaskObservation::from_pixels(&pixels, WIDTH, HEIGHT).unwrap();
        let expected = r / 2.0 * depth * cam.angular_resolution;
        let size = estimate_size(&mask, depth, &cam).unwrap();
        assert!((size - expected).abs() / expected < 0.02, "r={r}: {size} vs {expected}");
    }
}

#[test]
fn ellipse_elongation_matches_axis_ratio_squared() {
    for angle in [0.0, 0.4, 1.1, 2.5] {
        let pixels = common::raster_ellipse(640.0, 360.0, 20.0, 10.0, angle);
        let mask = MaskObservation::from_pixels(&pixels, WIDTH, HEIGHT).unwrap();
        let ratio = elongation_ratio(&mask).unwrap();
        assert!((ratio - 4.0).abs() / 4.0 < 0.05, "angle {angle}: {ratio}");
    }
}

#[test]
fn rasterized_boundary_masks_are_flagged() {
    let inside = common::raster_ellipse(640.0, 360.0, 10.0, 10.0, 0.0);
    assert!(!MaskObservation::from_pixels(&inside, WIDTH, HEIGHT).unwrap().touches_boundary());
    // the leftmost pixel of this disc sits in column 0
    let left = common::raster_ellipse(10.0, 360.0, 10.0, 10.0, 0.0);
    assert!(left.iter().any(|&(u, _)| u == 0));
    assert!(MaskObservation::from_pixels(&left, WIDTH, HEIGHT).unwrap().touches_boundary());
    let bottom = common::raster_ellipse(640.0, (HEIGHT - 11) as f64, 10.0, 10.0, 0.0);
    assert!(MaskObservation::from_pixels(&bottom, WIDTH, HEIGHT).unwrap().touches_boundary());
}

fn arb_mask() -> impl Strategy<Value = (MaskObservation, f64)> {
    (1.0f64..400.0, 0.05f64..1.0, 0.0f64..std::f64::consts::PI, 50.0f64..1200.0, 50.0f64..650.0, 0.5f64..40.0, any::<bool>())
        .prop_map(|(lmax, frac, angle, u, v, depth, edge)| {
            let r = Rotation2::new(angle).into_inner();
            let cov = r * Matrix2::new(lmax, 0.0, 0.0, lmax * frac) * r.transpose();
            let cov = 0.5 * (cov + cov.transpose());
            (MaskObservation::new([u, v], 50, cov, edge).unwrap(), depth)
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn filter_is_an_idempotent_order_preserving_subset(masks in prop::collection::vec(arb_mask(), 0..30)) {
        let cam = camera();
        let cfg = MaskFilterConfig::default();
        let kept = filter_masks(&masks, &cam, &cfg);
        prop_assert!(kept.len() <= masks.len());
        // subset, in input order
        let mut cursor = 0;
        for (m, _) in &kept {
            let pos = masks[cursor..].iter().position(|(x, _)| x == m);
            prop_assert!(pos.is_some());
            cursor += pos.unwrap() + 1;
        }
        let depths: Vec<(MaskObservation, f64)> = kept
            .iter()
            .map(|(m, _)| masks.iter().find(|(x, _)| x == m).unwrap().clone())
            .collect();
        let again = filter_masks(&depths, &cam, &cfg);
        prop_assert_eq!(again, kept);
    }

    #[test]
    fn size_is_linear_in_depth(mask in arb_mask(), k in 0.1f64..10.0) {
        let cam = camera();
        let (m, d) = mask;
        let s1 = estimate_size(&m, d, &cam).unwrap();
        let s2 = estimate_size(&m, k * d, &cam).unwrap();
        prop_assert!((s2 - k * s1).abs() <= 1e-12 * s2.max(1.0));
    }

    #[test]
    fn elongation_is_rotation_invariant(lmax in 1.0f64..400.0, frac in 0.05f64..1.0, a in 0.0f64..6.3, b in 0.0f64..6.3) {
        let r1 = elongation_ratio(&mask_with_cov(lmax, lmax * frac, a, [640.0, 360.0])).unwrap();
        let r2 = elongation_ratio(&mask_with_cov(lmax, lmax * frac, b, [640.0, 360.0])).unwrap();
        prop_assert!((r1 - r2).abs() <= 1e-9 * r1);
        prop_assert!((r1 - 1.0 / frac).abs() <= 1e-9 * r1);
    }

    #[test]
    fn projection_round_trips(x in -5.0f64..5.0, y in -3.0f64..3.0, z in 0.5f64..40.0, seed in any::<u64>()) {
        let mut rng = common::rng(seed);
        let extrinsics = RigidTransform::random(&mut rng, 1.0);
        let cam = CameraModel::pinhole(1250.0, 0.162, WIDTH, HEIGHT, extrinsics).unwrap();
        let p_cam = Point3::new(x, y, z);
        let [u, v, depth] = cam.project(&p_cam);
        prop_assume!((0.0..=WIDTH as f64).contains(&u) && (0.0..=HEIGHT as f64).contains(&v));
        let mask = MaskObservation::new([u, v], 10, Matrix2::identity(), false).unwrap();
        let det = project_detection(&mask, depth, 0.3, &cam, "front_left").unwrap();
        let back = extrinsics.inverse().apply(&det.position);
        prop_assert!((back - p_cam).norm() < 1e-6);
        let disparity = disparity_of(&p_cam, &cam);
        prop_assert!((depth_from_disparity(disparity, &cam).unwrap() - z).abs() < 1e-9 * z);
    }

    #[test]
    fn range_grows_with_depth_along_a_ray(u in 0.0f64..1280.0, v in 0.0f64..720.0, d in 0.5f64..30.0, k in 1.01f64..5.0) {
        let cam = camera();
        let mask = MaskObservation::new([u, v], 10, Matrix2::identity(), false).unwrap();
        let near = project_detection(&mask, d, 0.3, &cam, "c").unwrap().position;
        let far = project_detection(&mask, k * d, 0.3, &cam, "c").unwrap().position;
        prop_assert!(far.coords.norm() > near.coords.norm());
        // range equals depth divided by the cosine of the viewing angle
        let ray = cam.back_project(u, v, 1.0).coords;
        let cos = ray.z / ray.norm();
        prop_assert!((near.coords.norm() - d / cos).abs() < 1e-9 * (d / cos));
    }
}
