mod common;

use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::Rng;
use segloc::geometry::{
    compose, estimate_rigid_transform, invert, rotation_error_rad, translation_rmse, CorrespondenceSet, GeometryError,
    Point3, RigidTransform,
};

fn pairs_under(t: &RigidTransform, points: &[Point3]) -> Vec<(Point3, Point3)> {
    points.iter().map(|p| (*p, t.apply(p))).collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn estimate_is_permutation_invariant(seed in any::<u64>(), n in 3usize..40) {
        let mut rng = common::rng(seed);
        let t = RigidTransform::random(&mut rng, 10.0);
        let points = common::random_points(&mut rng, n, 5.0);
        let mut pairs = pairs_under(&t, &points);
        for (_, b) in pairs.iter_mut() {
            *b += nalgebra::Vector3::from_fn(|_, _| rng.random_range(-0.05..0.05));
        }
        let base = estimate_rigid_transform(&CorrespondenceSet::new(pairs.clone()).unwrap()).unwrap();
        pairs.shuffle(&mut rng);
        let shuffled = estimate_rigid_transform(&CorrespondenceSet::new(pairs).unwrap()).unwrap();
        prop_assert!(base.max_abs_diff(&shuffled) < 1e-9);
    }

    #[test]
    fn estimate_is_equivariant(seed in any::<u64>(), n in 3usize..40) {
        let mut rng = common::rng(seed);
        let t = RigidTransform::random(&mut rng, 10.0);
        let g = RigidTransform::random(&mut rng, 10.0);
        let points = common::random_points(&mut rng, n, 5.0);
        let pairs = pairs_under(&t, &points);
        let base = estimate_rigid_transform(&CorrespondenceSet::new(pairs.clone()).unwrap()).unwrap();
        // moving the target cloud by g composes g onto the estimate
        let moved: Vec<_> = pairs.iter().map(|(a, b)| (*a, g.apply(b))).collect();
        let est = estimate_rigid_transform(&CorrespondenceSet::new(moved).unwrap()).unwrap();
        prop_assert!(est.max_abs_diff(&compose(&g, &base)) < 1e-9);
    }

    #[test]
    fn estimate_recovers_exact_transform(seed in any::<u64>(), n in 3usize..40) {
        let mut rng = common::rng(seed);
        let t = RigidTransform::random(&mut rng, 10.0);
        let points = common::random_points(&mut rng, n, 5.0);
        let est = estimate_rigid_transform(&CorrespondenceSet::new(pairs_under(&t, &points)).unwrap()).unwrap();
        prop_assert!(est.max_abs_diff(&t) < 1e-9);
        prop_assert!((est.rotation().determinant() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn compose_and_invert_cancel(seed in any::<u64>()) {
        let mut rng = common::rng(seed);
        let t = RigidTransform::random(&mut rng, 10.0);
        let id = RigidTransform::identity();
        prop_assert!(compose(&t, &invert(&t)).max_abs_diff(&id) < 1e-12);
        prop_assert!(compose(&invert(&t), &t).max_abs_diff(&id) < 1e-12);
    }

    #[test]
    fn compose_is_associative_and_matches_application(seed in any::<u64>()) {
        let mut rng = common::rng(seed);
        let a = RigidTransform::random(&mut rng, 10.0);
        let b = RigidTransform::random(&mut rng, 10.0);
        let c = RigidTransform::random(&mut rng, 10.0);
        prop_assert!(compose(&compose(&a, &b), &c).max_abs_diff(&compose(&a, &compose(&b, &c))) < 1e-12);
        let p = common::random_points(&mut rng, 1, 5.0)[0];
        prop_assert!((compose(&a, &b).apply(&p) - a.apply(&b.apply(&p))).norm() < 1e-12);
    }

    #[test]
    fn translation_rmse_is_a_metric(seed in any::<u64>()) {
        let mut rng = common::rng(seed);
        let a = RigidTransform::random(&mut rng, 10.0);
        let b = RigidTransform::random(&mut rng, 10.0);
        let c = RigidTransform::random(&mut rng, 10.0);
        prop_assert!(translation_rmse(&a, &b) >= 0.0);
        prop_assert_eq!(translation_rmse(&a, &a), 0.0);
        prop_assert_eq!(translation_rmse(&a, &b), translation_rmse(&b, &a));
        prop_assert!(translation_rmse(&a, &c) <= translation_rmse(&a, &b) + translation_rmse(&b, &c) + 1e-12);
    }

    #[test]
    fn rotation_error_is_symmetric_and_bounded(seed in any::<u64>()) {
        let mut rng = common::rng(seed);
        let a = RigidTransform::random(&mut rng, 1.0);
        let b = RigidTransform::random(&mut rng, 1.0);
        let e = rotation_error_rad(&a, &b);
        prop_assert!((0.0..=std::f64::consts::PI + 1e-12).contains(&e));
        prop_assert!((e - rotation_error_rad(&b, &a)).abs() < 1e-12);
        prop_assert!(rotation_error_rad(&a, &a) < 1e-7);
    }

    #[test]
    fn quaternion_round_trip(seed in any::<u64>()) {
        let mut rng = common::rng(seed);
        let t = RigidTransform::random(&mut rng, 10.0);
        let q = t.quaternion();
        prop_assert!(q[0] >= 0.0);
        let back = RigidTransform::from_quaternion(q, *t.translation()).unwrap();
        prop_assert!(back.max_abs_diff(&t) < 1e-12);
    }
}

#[test]
fn collinear_and_short_inputs_are_rejected() {
    let line: Vec<_> = (0..5)
        .map(|k| {
            let p = Point3::new(k as f64, 2.0 * k as f64, -(k as f64));
            (p, p)
        })
        .collect();
    assert_eq!(
        estimate_rigid_transform(&CorrespondenceSet::new(line).unwrap()),
        Err(GeometryError::DegenerateGeometry)
    );
    let two = vec![(Point3::origin(), Point3::origin()), (Point3::new(1.0, 0.0, 0.0), Point3::new(1.0, 0.0, 0.0))];
    assert_eq!(
        estimate_rigid_transform(&CorrespondenceSet::new(two).unwrap()),
        Err(GeometryError::TooFewCorrespondences(2))
    );
}

#[test]
fn mirrored_target_still_yields_a_proper_rotation() {
    let mut rng = common::rng(11);
    let points = common::random_points(&mut rng, 12, 3.0);
    let pairs: Vec<_> = points.iter().map(|p| (*p, Point3::new(-p.x, p.y, p.z))).collect();
    let est = estimate_rigid_transform(&CorrespondenceSet::new(pairs).unwrap()).unwrap();
    assert!((est.rotation().determinant() - 1.0).abs() < 1e-9);
}
