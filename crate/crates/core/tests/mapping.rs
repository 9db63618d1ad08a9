mod common;

use proptest::prelude::*;
use rand::Rng;
use segloc::geometry::{compose, Point3, RigidTransform};
use segloc::mapping::{accumulate, map_bounds, merge_duplicates, merge_duplicates_with_members, Landmark, MergeConfig, ObjectMap};
use segloc::mask_pipeline::RoverFrameDetection;

/// Landmarks scattered around a few true positions, the way repeated
/// detections of the same boulders look.
fn observed_map(seed: u64, boulders: usize, repeats: usize, jitter: f64) -> ObjectMap {
    let mut rng = common::rng(seed);
    let centers = common::random_points(&mut rng, boulders, 10.0);
    let mut map = ObjectMap::new("world");
    for c in &centers {
        for _ in 0..rng.random_range(1..=repeats) {
            let p = c + nalgebra::Vector3::from_fn(|_, _| rng.random_range(-jitter..jitter));
            map.push(Landmark::new(p, rng.random_range(0.1..0.8))).unwrap();
        }
    }
    map
}

fn detections(seed: u64, n: usize) -> Vec<RoverFrameDetection> {
    let mut rng = common::rng(seed);
    common::random_points(&mut rng, n, 8.0)
        .into_iter()
        .map(|p| RoverFrameDetection {
            position: p,
            size_m: rng.random_range(0.1..1.0),
            source_camera: "front_left".into(),
        })
        .collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn accumulate_is_equivariant(seed in any::<u64>(), n in 0usize..20) {
        let mut rng = common::rng(seed);
        let g = RigidTransform::random(&mut rng, 20.0);
        let pose = RigidTransform::random(&mut rng, 20.0);
        let base = observed_map(seed, 5, 2, 0.05);
        let dets = detections(seed ^ 1, n);
        let left = accumulate(&base, &pose, &dets).transformed(&g);
        let right = accumulate(&base.transformed(&g), &compose(&g, &pose), &dets);
        prop_assert_eq!(left.len(), base.len() + n);
        for (a, b) in left.landmarks().iter().zip(right.landmarks()) {
            prop_assert!((a.position - b.position).norm() < 1e-9);
            prop_assert_eq!(a.size_m, b.size_m);
        }
    }

    #[test]
    fn merge_is_idempotent(seed in any::<u64>(), boulders in 1usize..40, jitter in 0.0f64..0.2) {
        let cfg = MergeConfig::default();
        let once = merge_duplicates(&observed_map(seed, boulders, 5, jitter), &cfg);
        let twice = merge_duplicates(&once, &cfg);
        prop_assert_eq!(once, twice);
    }

    #[test]
    fn merge_conserves_observations(seed in any::<u64>(), boulders in 1usize..40, jitter in 0.0f64..0.3) {
        let map = observed_map(seed, boulders, 5, jitter);
        let cfg = MergeConfig { min_observations: 1, ..Default::default() };
        let (merged, members) = merge_duplicates_with_members(&map, &cfg);
        prop_assert_eq!(merged.total_observations(), map.total_observations());
        // every input lands in exactly one cluster
        let mut all: Vec<usize> = members.iter().flatten().copied().collect();
        all.sort_unstable();
        prop_assert_eq!(all, (0..map.len()).collect::<Vec<_>>());
    }

    #[test]
    fn merged_clusters_are_separated_and_anchored(seed in any::<u64>(), boulders in 1usize..40, jitter in 0.0f64..0.3) {
        let map = observed_map(seed, boulders, 5, jitter);
        let cfg = MergeConfig { min_observations: 1, ..Default::default() };
        let (merged, members) = merge_duplicates_with_members(&map, &cfg);
        let lm = merged.landmarks();
        for i in 0..lm.len() {
            for j in i + 1..lm.len() {
                prop_assert!((lm[i].position - lm[j].position).norm() > cfg.cluster_radius_m);
            }
            let nearest = members[i]
                .iter()
                .map(|&k| (map.landmarks()[k].position - lm[i].position).norm())
                .fold(f64::INFINITY, f64::min);
            prop_assert!(nearest <= cfg.cluster_radius_m);
        }
        for w in lm.windows(2) {
            prop_assert!(w[0].observation_count >= w[1].observation_count);
        }
    }

    #[test]
    fn merge_drops_sparse_clusters(seed in any::<u64>(), boulders in 1usize..40) {
        let map = observed_map(seed, boulders, 4, 0.05);
        let cfg = MergeConfig { min_observations: 3, ..Default::default() };
        for l in merge_duplicates(&map, &cfg).landmarks() {
            prop_assert!(l.observation_count >= 3);
        }
    }
}

#[test]
fn repeated_detections_collapse_to_true_positions() {
    let mut rng = common::rng(5);
    let truth: Vec<Point3> = (0..30)
        .map(|k| Point3::new(2.0 * (k % 6) as f64, 2.0 * (k / 6) as f64, 0.0))
        .collect();
    let mut map = ObjectMap::new("world");
    for p in &truth {
        for _ in 0..4 {
            let q = p + nalgebra::Vector3::from_fn(|_, _| rng.random_range(-0.05..0.05));
            map.push(Landmark::new(q, 0.5)).unwrap();
        }
    }
    let merged = merge_duplicates(&map, &MergeConfig::default());
    assert_eq!(merged.len(), truth.len());
    for l in merged.landmarks() {
        assert_eq!(l.observation_count, 4);
        let nearest = truth.iter().map(|t| (t - l.position).norm()).fold(f64::INFINITY, f64::min);
        assert!(nearest < 0.05);
    }
    let bounds = map_bounds(&merged).unwrap();
    assert!(bounds.min.x < 0.05 && bounds.max.x > 9.95 && bounds.max.y > 7.95);
}
