//! World-frame landmark maps built from per-frame detections.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{Point3, RigidTransform};
use crate::mask_pipeline::RoverFrameDetection;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MapError {
    #[error("map is empty")]
    EmptyMap,
    #[error("invalid landmark {index}: {reason}")]
    InvalidLandmark { index: usize, reason: &'static str },
    #[error("invalid merge config: {0}")]
    InvalidConfig(&'static str),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Landmark {
    pub position: Point3,
    pub size_m: f64,
    pub observation_count: u32,
}

impl Landmark {
    pub fn new(position: Point3, size_m: f64) -> Self {
        Self {
            position,
            size_m,
            observation_count: 1,
        }
    }

    fn check(&self, index: usize) -> Result<(), MapError> {
        if !self.position.coords.iter().all(|v| v.is_finite()) {
            return Err(MapError::InvalidLandmark { index, reason: "non-finite position" });
        }
        if !(self.size_m > 0.0) || !self.size_m.is_finite() {
            return Err(MapError::InvalidLandmark { index, reason: "size must be positive" });
        }
        if self.observation_count == 0 {
            return Err(MapError::InvalidLandmark { index, reason: "observation_count must be at least 1" });
        }
        Ok(())
    }
}

/// A set of landmarks expressed in one frame.
///
/// `session` identifies the recording a map was built from; together with
/// `frame_name` it lets association refuse to compare a map with itself.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObjectMap {
    pub frame_name: String,
    pub session: Option<String>,
    landmarks: Vec<Landmark>,
}

impl ObjectMap {
    pub fn new(frame_name: impl Into<String>) -> Self {
        Self {
            frame_name: frame_name.into(),
            session: None,
            landmarks: Vec::new(),
        }
    }

    pub fn with_session(mut self, session: impl Into<String>) -> Self {
        self.session = Some(session.into());
        self
    }

    pub fn from_landmarks(frame_name: impl Into<String>, landmarks: Vec<Landmark>) -> Result<Self, MapError> {
        for (i, l) in landmarks.iter().enumerate() {
            l.check(i)?;
        }
        Ok(Self {
            frame_name: frame_name.into(),
            session: None,
            landmarks,
        })
    }

    pub fn landmarks(&self) -> &[Landmark] {
        &self.landmarks
    }

    pub fn len(&self) -> usize {
        self.landmarks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.landmarks.is_empty()
    }

    pub fn positions(&self) -> impl Iterator<Item = &Point3> {
        self.landmarks.iter().map(|l| &l.position)
    }

    pub fn total_observations(&self) -> u64 {
        self.landmarks.iter().map(|l| l.observation_count as u64).sum()
    }

    /// Applies `transform` to every landmark position.
    pub fn transformed(&self, transform: &RigidTransform) -> ObjectMap {
        ObjectMap {
            frame_name: self.frame_name.clone(),
            session: self.session.clone(),
            landmarks: self
                .landmarks
                .iter()
                .map(|l| Landmark {
                    position: transform.apply(&l.position),
                    ..l.clone()
                })
                .collect(),
        }
    }

    /// Appends a landmark, validating it.
    pub fn push(&mut self, landmark: Landmark) -> Result<(), MapError> {
        landmark.check(self.landmarks.len())?;
        self.landmarks.push(landmark);
        Ok(())
    }
}

/// Places rover-frame detections into the map's frame using `rover_pose`
/// (rover to world). One landmark is appended per detection.
pub fn accumulate(map: &ObjectMap, rover_pose: &RigidTransform, detections: &[RoverFrameDetection]) -> ObjectMap {
    let mut out = map.clone();
    out.landmarks.extend(detections.iter().map(|d| Landmark {
        position: rover_pose.apply(&d.position),
        size_m: d.size_m,
        observation_count: 1,
    }));
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MergeConfig {
    pub cluster_radius_m: f64,
    pub min_observations: u32,
}

impl Default for MergeConfig {
    fn default() -> Self {
        Self {
            cluster_radius_m: 0.3,
            min_observations: 2,
        }
    }
}

impl MergeConfig {
    pub fn validate(&self) -> Result<(), MapError> {
        if !(self.cluster_radius_m > 0.0) {
            return Err(MapError::InvalidConfig("cluster_radius_m must be positive"));
        }
        if self.min_observations == 0 {
            return Err(MapError::InvalidConfig("min_observations must be at least 1"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
struct Cluster {
    position: Point3,
    size_sum: f64,
    count: u64,
    members: Vec<usize>,
}

impl Cluster {
    fn absorb(&mut self, other: Cluster) {
        let total = (self.count + other.count) as f64;
        let w = other.count as f64 / total;
        self.position += (other.position - self.position) * w;
        self.size_sum += other.size_sum;
        self.count += other.count;
        self.members.extend(other.members);
    }
}

/// Uniform-grid index for radius queries.
struct Grid {
    cell: f64,
    cells: HashMap<(i64, i64, i64), Vec<usize>>,
}

impl Grid {
    fn new(points: &[Point3], cell: f64) -> Self {
        let mut cells: HashMap<_, Vec<usize>> = HashMap::new();
        for (i, p) in points.iter().enumerate() {
            cells.entry(Self::key(p, cell)).or_default().push(i);
        }
        Self { cell, cells }
    }

    fn key(p: &Point3, cell: f64) -> (i64, i64, i64) {
        (
            (p.x / cell).floor() as i64,
            (p.y / cell).floor() as i64,
            (p.z / cell).floor() as i64,
        )
    }

    fn neighbors<'a>(&'a self, p: &Point3) -> impl Iterator<Item = usize> + 'a {
        let (x, y, z) = Self::key(p, self.cell);
        (-1..=1).flat_map(move |dx| {
            (-1..=1).flat_map(move |dy| {
                (-1..=1).flat_map(move |dz| {
                    self.cells
                        .get(&(x + dx, y + dy, z + dz))
                        .into_iter()
                        .flat_map(|v| v.iter().copied())
                })
            })
        })
    }
}

/// One greedy pass: items are visited by descending neighborhood weight
/// (ties by input order) and each joins the nearest cluster whose running
/// centroid lies within `radius`, or starts a new one.
fn greedy_pass(items: Vec<Cluster>, radius: f64) -> (Vec<Cluster>, bool) {
    let positions: Vec<Point3> = items.iter().map(|c| c.position).collect();
    let grid = Grid::new(&positions, radius);
    let density: Vec<u64> = positions
        .iter()
        .map(|p| {
            grid.neighbors(p)
                .filter(|&j| (positions[j] - p).norm() <= radius)
                .map(|j| items[j].count)
                .sum()
        })
        .collect();
    let mut order: Vec<usize> = (0..items.len()).collect();
    order.sort_by(|&a, &b| density[b].cmp(&density[a]));

    let mut slots: Vec<Option<Cluster>> = items.into_iter().map(Some).collect();
    let mut clusters: Vec<Cluster> = Vec::new();
    let mut merged_any = false;
    for i in order {
        let item = slots[i].take().expect("each item visited once");
        let nearest = clusters
            .iter()
            .enumerate()
            .map(|(k, c)| (k, (c.position - item.position).norm()))
            .filter(|&(_, d)| d <= radius)
            .min_by(|a, b| a.1.total_cmp(&b.1));
        match nearest {
            Some((k, _)) => {
                clusters[k].absorb(item);
                merged_any = true;
            }
            None => clusters.push(item),
        }
    }
    (clusters, merged_any)
}

fn well_separated(clusters: &[Cluster], radius: f64) -> bool {
    let positions: Vec<Point3> = clusters.iter().map(|c| c.position).collect();
    let grid = Grid::new(&positions, radius);
    positions
        .iter()
        .enumerate()
        .all(|(i, p)| grid.neighbors(p).all(|j| j == i || (positions[j] - p).norm() > radius))
}

/// Merges landmarks into clusters and reports, for each output landmark,
/// the input indices it was built from.
pub fn merge_duplicates_with_members(map: &ObjectMap, config: &MergeConfig) -> (ObjectMap, Vec<Vec<usize>>) {
    let radius = config.cluster_radius_m;
    let mut clusters: Vec<Cluster> = map
        .landmarks
        .iter()
        .enumerate()
        .map(|(i, l)| Cluster {
            position: l.position,
            size_sum: l.size_m * l.observation_count as f64,
            count: l.observation_count as u64,
            members: vec![i],
        })
        .collect();

    // Running centroids drift, so repeat until no two clusters are within
    // the radius; the result is then a fixed point of the pass.
    loop {
        let (next, merged_any) = greedy_pass(clusters, radius);
        clusters = next;
        if !merged_any || well_separated(&clusters, radius) {
            break;
        }
    }

    clusters.retain(|c| c.count >= config.min_observations as u64);
    clusters.sort_by_key(|c| std::cmp::Reverse(c.count));

    let mut members = Vec::with_capacity(clusters.len());
    let landmarks = clusters
        .into_iter()
        .map(|c| {
            members.push(c.members);
            Landmark {
                position: c.position,
                size_m: c.size_sum / c.count as f64,
                observation_count: c.count.min(u32::MAX as u64) as u32,
            }
        })
        .collect();
    (
        ObjectMap {
            frame_name: map.frame_name.clone(),
            session: map.session.clone(),
            landmarks,
        },
        members,
    )
}

/// Greedy radius clustering of repeated observations. Output positions are
/// observation-weighted centroids, clusters below `min_observations` are
/// dropped, and landmarks are ordered by descending observation count.
pub fn merge_duplicates(map: &ObjectMap, config: &MergeConfig) -> ObjectMap {
    merge_duplicates_with_members(map, config).0
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Aabb {
    pub min: Point3,
    pub max: Point3,
}

impl Aabb {
    pub fn extent(&self) -> nalgebra::Vector3<f64> {
        self.max - self.min
    }
}

pub fn map_bounds(map: &ObjectMap) -> Result<Aabb, MapError> {
    let mut it = map.positions();
    let first = *it.next().ok_or(MapError::EmptyMap)?;
    Ok(it.fold(Aabb { min: first, max: first }, |b, p| Aabb {
        min: b.min.inf(p),
        max: b.max.sup(p),
    }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::Vector3;

    fn det(x: f64, y: f64, z: f64) -> RoverFrameDetection {
        RoverFrameDetection {
            position: Point3::new(x, y, z),
            size_m: 0.3,
            source_camera: "front".into(),
        }
    }

    fn map_of(points: &[[f64; 3]]) -> ObjectMap {
        ObjectMap::from_landmarks(
            "world",
            points.iter().map(|p| Landmark::new(Point3::new(p[0], p[1], p[2]), 0.2)).collect(),
        )
        .unwrap()
    }

    #[test]
    fn accumulate_examples() {
        let empty = ObjectMap::new("world");
        let m = accumulate(&empty, &RigidTransform::identity(), &[det(1.0, 0.0, 0.0)]);
        assert_eq!(m.landmarks()[0].position, Point3::new(1.0, 0.0, 0.0));
        let pose = RigidTransform::from_translation(Vector3::new(5.0, 0.0, 0.0));
        let m = accumulate(&m, &pose, &[det(1.0, 0.0, 0.0)]);
        assert_eq!(m.len(), 2);
        assert_eq!(m.landmarks()[1].position, Point3::new(6.0, 0.0, 0.0));
        assert!(empty.is_empty());
    }

    #[test]
    fn merge_examples() {
        let cfg = MergeConfig::default();
        let merged = merge_duplicates(&map_of(&[[1.0, 1.0, 0.0], [1.0, 1.0, 0.0]]), &cfg);
        assert_eq!(merged.len(), 1);
        assert_eq!(merged.landmarks()[0].observation_count, 2);
        assert_eq!(merged.landmarks()[0].position, Point3::new(1.0, 1.0, 0.0));

        let far = 10.0 * cfg.cluster_radius_m;
        let cfg1 = MergeConfig { min_observations: 1, ..cfg };
        let merged = merge_duplicates(&map_of(&[[0.0, 0.0, 0.0], [far, 0.0, 0.0]]), &cfg1);
        assert_eq!(merged.len(), 2);
        // singletons are dropped at the default threshold
        assert!(merge_duplicates(&map_of(&[[0.0, 0.0, 0.0], [far, 0.0, 0.0]]), &cfg).is_empty());
    }

    #[test]
    fn merge_weights_by_observations() {
        let mut m = ObjectMap::new("world");
        m.push(Landmark { position: Point3::new(0.0, 0.0, 0.0), size_m: 0.1, observation_count: 3 }).unwrap();
        m.push(Landmark { position: Point3::new(0.2, 0.0, 0.0), size_m: 0.5, observation_count: 1 }).unwrap();
        let out = merge_duplicates(&m, &MergeConfig::default());
        assert_eq!(out.len(), 1);
        let l = &out.landmarks()[0];
        assert!((l.position.x - 0.05).abs() < 1e-12);
        assert!((l.size_m - 0.2).abs() < 1e-12);
        assert_eq!(l.observation_count, 4);
    }

    #[test]
    fn bounds_examples() {
        assert_eq!(map_bounds(&ObjectMap::new("world")), Err(MapError::EmptyMap));
        let p = [0.5, -1.0, 2.0];
        let b = map_bounds(&map_of(&[p])).unwrap();
        assert_eq!(b.min, b.max);
        let b = map_bounds(&map_of(&[[0.0, 0.0, 0.0], [1.0, 2.0, 3.0]])).unwrap();
        assert_eq!(b.min, Point3::new(0.0, 0.0, 0.0));
        assert_eq!(b.max, Point3::new(1.0, 2.0, 3.0));
    }

    #[test]
    fn invalid_landmarks_rejected() {
        let mut m = ObjectMap::new("world");
        assert!(m.push(Landmark::new(Point3::new(f64::NAN, 0.0, 0.0), 0.1)).is_err());
        assert!(m.push(Landmark::new(Point3::origin(), 0.0)).is_err());
        let zero = Landmark { observation_count: 0, ..Landmark::new(Point3::origin(), 0.1) };
        assert!(m.push(zero).is_err());
        assert!(MergeConfig { cluster_radius_m: 0.0, min_observations: 1 }.validate().is_err());
        assert!(MergeConfig { cluster_radius_m: 0.1, min_observations: 0 }.validate().is_err());
    }
}
