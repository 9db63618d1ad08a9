mod common;

use segloc::association::{AssociationConfig, AssociationError};
use segloc::dataset::{generate_synthetic_scene, map_to_traverse, save_traverse, SyntheticSceneConfig};
use segloc::geometry::{compose, invert, rotation_error_rad, translation_rmse, RigidTransform};
use segloc::localization::{evaluate_pair, evaluation_report, EvaluationConfig, EvaluationStatus, REPORT_COLUMNS};
use segloc::{localize, LocalizationError};

fn scene(seed: u64, noise: f64) -> segloc::dataset::SyntheticScene {
    generate_synthetic_scene(&SyntheticSceneConfig {
        boulder_count: 60,
        shared_fraction: 1.0,
        position_noise_m: noise,
        outlier_landmarks_per_map: 20,
        seed,
        ..Default::default()
    })
}

#[test]
fn identical_maps_recover_ground_truth() {
    for seed in 0..5 {
        let s = generate_synthetic_scene(&SyntheticSceneConfig {
            boulder_count: 40,
            shared_fraction: 1.0,
            position_noise_m: 0.0,
            outlier_landmarks_per_map: 0,
            seed,
            ..Default::default()
        });
        let res = localize(&s.map_a, &s.map_b, &AssociationConfig::default()).unwrap();
        assert!(res.transform.max_abs_diff(&s.ground_truth) < 1e-9, "seed {seed}");
        assert_eq!(res.inlier_count, 40);
    }
}

#[test]
fn noisy_scene_meets_error_bounds() {
    for seed in 0..5 {
        let s = scene(seed, 0.02);
        let res = localize(&s.map_a, &s.map_b, &AssociationConfig::default()).unwrap();
        assert!(translation_rmse(&res.transform, &s.ground_truth) < 0.02, "seed {seed}");
        assert!(rotation_error_rad(&res.transform, &s.ground_truth).to_degrees() < 0.5, "seed {seed}");
        assert!(!res.suspect);
    }
}

#[test]
fn localization_is_equivariant_to_vehicle_motion() {
    let mut rng = common::rng(99);
    for seed in 0..5 {
        let s = scene(seed, 0.02);
        let cfg = AssociationConfig::default();
        let base = localize(&s.map_a, &s.map_b, &cfg).unwrap();
        let g = RigidTransform::random(&mut rng, 20.0);
        let moved = localize(&s.map_a.transformed(&g), &s.map_b, &cfg).unwrap();
        let expected = compose(&base.transform, &invert(&g));
        assert!(moved.transform.max_abs_diff(&expected) < 1e-6, "seed {seed}");
        assert_eq!(moved.inlier_count, base.inlier_count);
    }
}

#[test]
fn localization_is_deterministic() {
    let s = scene(4, 0.02);
    let cfg = AssociationConfig::default();
    let a = localize(&s.map_a, &s.map_b, &cfg).unwrap();
    let b = localize(&s.map_a, &s.map_b, &cfg).unwrap();
    assert_eq!(a, b);
    assert_eq!(serde_json_like(&a), serde_json_like(&b));
}

fn serde_json_like(r: &segloc::LocalizationResult) -> Vec<u64> {
    r.transform
        .to_homogeneous()
        .iter()
        .map(|v| v.to_bits())
        .chain([r.residual_rms_m.to_bits(), r.density.to_bits()])
        .collect()
}

#[test]
fn unrelated_maps_are_rejected_without_a_transform() {
    let s = generate_synthetic_scene(&SyntheticSceneConfig {
        boulder_count: 40,
        shared_fraction: 0.0,
        outlier_landmarks_per_map: 0,
        seed: 1,
        ..Default::default()
    });
    match localize(&s.map_a, &s.map_b, &AssociationConfig { min_inliers: 8, ..Default::default() }) {
        Err(LocalizationError::Rejected(AssociationError::TooFewInliers { .. })) => {}
        other => panic!("expected rejection, got {other:?}"),
    }
}

#[test]
fn tiny_maps_are_rejected() {
    let mut rng = common::rng(3);
    let pts = common::random_points(&mut rng, 4, 5.0);
    let m = common::map_from("m", &pts, 0.3);
    assert!(matches!(
        localize(&m, &m, &AssociationConfig::default()),
        Err(LocalizationError::Rejected(_))
    ));
}

#[test]
fn full_size_scene_keeps_inlier_precision() {
    // 386 boulders in 27 m × 27 m with 1 m relief; size gating keeps the
    // candidate set tractable and never removes a true pair here because
    // shared boulders keep their size.
    let cfg = AssociationConfig { size_gate_ratio: Some(1.2), ..Default::default() };
    let mut precisions = Vec::new();
    for seed in 0..50 {
        let s = generate_synthetic_scene(&SyntheticSceneConfig { seed, ..Default::default() });
        let res = localize(&s.map_a, &s.map_b, &cfg).unwrap_or_else(|e| panic!("seed {seed}: {e}"));
        let correct = res
            .associations
            .iter()
            .filter(|c| s.correspondences.contains(&(c.source_index, c.target_index)))
            .count();
        let precision = correct as f64 / res.associations.len() as f64;
        assert!(translation_rmse(&res.transform, &s.ground_truth) < 0.02, "seed {seed}");
        precisions.push(precision);
    }
    let worst = precisions.iter().copied().fold(1.0, f64::min);
    assert!(worst >= 0.95, "worst inlier precision {worst}");
}

#[test]
fn synthetic_traverses_evaluate_end_to_end() {
    let dir = tempfile::tempdir().unwrap();
    let s = generate_synthetic_scene(&SyntheticSceneConfig {
        boulder_count: 80,
        area_m: 40.0,
        shared_fraction: 0.6,
        position_noise_m: 0.005,
        outlier_landmarks_per_map: 5,
        seed: 12,
        ..Default::default()
    });
    // express map B in map A's frame, as traverses of one site share a world frame
    let b_world = s.map_b.transformed(&s.ground_truth.inverse());
    save_traverse(&map_to_traverse(&s.map_a, 0.1), &dir.path().join("traverse_a.csv")).unwrap();
    save_traverse(&map_to_traverse(&b_world, 0.1), &dir.path().join("traverse_b.csv")).unwrap();

    let cfg = EvaluationConfig::default();
    let row = evaluate_pair("a", "b", dir.path(), &cfg);
    assert_eq!(row.status, EvaluationStatus::Ok, "{:?}", row.detail);
    assert!(row.inliers >= 40);
    assert!(row.rmse_cm.unwrap() < 2.0);

    let missing = evaluate_pair("a", "zz", dir.path(), &cfg);
    assert_eq!(missing.status, EvaluationStatus::Missing);

    // one traverse against itself, no perturbation: exact recovery
    let same = EvaluationConfig {
        perturb: false,
        association: AssociationConfig { allow_self_comparison: true, ..Default::default() },
        ..Default::default()
    };
    let row = evaluate_pair("a", "a", dir.path(), &same);
    assert_eq!(row.rmse_cm, Some(0.0));
    // without the opt-in the same-session comparison is refused
    let refused = evaluate_pair("a", "a", dir.path(), &EvaluationConfig { perturb: false, ..Default::default() });
    assert_eq!(refused.status, EvaluationStatus::Error);

    let report = evaluation_report(&[row, missing]);
    let mut lines = report.csv.lines();
    assert_eq!(lines.next().unwrap(), REPORT_COLUMNS.join(","));
    assert!(lines.next().unwrap().ends_with(",0.00,0.000,ok"));
    assert!(lines.next().unwrap().ends_with(",missing"));
}
