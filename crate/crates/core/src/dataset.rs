//! Traverse detection tables, map CSV files, playback, and a seeded
//! synthetic scene generator.
//!
//! Traverse CSV (UTF-8, LF, floats at 9 significant digits):
//!
//! ```text
//! frame,mission_time_s,px,py,pz,qw,qx,qy,qz,det_x,det_y,det_z,det_size_m
//! ```
//!
//! One row per detection with the rover pose (rover → world, quaternion
//! `w,x,y,z`) repeated on each row. A frame without detections is a single
//! row whose four detection fields are empty. The world frame is
//! right-handed with z up; detections are in the rover frame.
//!
//! Published tables whose column names differ are read through a
//! [`ColumnMapping`].
//!
//! All randomness comes from `ChaCha8Rng` seeded explicitly by the caller.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::fs;
use std::io::{self, Read};
use std::ops::Range;
use std::path::{Path, PathBuf};

use nalgebra::Vector3;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{Point3, RigidTransform};
use crate::mapping::{Landmark, MapError, ObjectMap};
use crate::mask_pipeline::RoverFrameDetection;

pub const TRAVERSE_COLUMNS: [&str; 13] = [
    "frame",
    "mission_time_s",
    "px",
    "py",
    "pz",
    "qw",
    "qx",
    "qy",
    "qz",
    "det_x",
    "det_y",
    "det_z",
    "det_size_m",
];

pub const MAP_COLUMNS: [&str; 5] = ["x", "y", "z", "size_m", "observation_count"];

/// Camera label given to detections read from a table, which does not
/// record the source camera.
pub const TABLE_SOURCE: &str = "table";

/// Quaternions whose norm differs from 1 by more than this are logged when
/// normalized on ingest.
pub const QUATERNION_NORM_TOLERANCE: f64 = 1e-6;

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
    #[error("malformed header: expected {expected}, found {found}")]
    MalformedHeader { expected: String, found: String },
    #[error("line {line}: {reason}")]
    MalformedRow { line: u64, reason: String },
    #[error("line {line}: {reason}")]
    NonMonotonicFrames { line: u64, reason: String },
    #[error("range {start}..{end} out of bounds for {len} records")]
    RangeOutOfBounds { start: usize, end: usize, len: usize },
    #[error("column mapping line {line}: {reason}")]
    MalformedMapping { line: usize, reason: String },
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Map(#[from] MapError),
}

fn io_err(path: &Path) -> impl FnOnce(io::Error) -> DatasetError + '_ {
    move |source| DatasetError::Io {
        path: path.to_path_buf(),
        source,
    }
}

/// Formats `x` with 9 significant digits in plain decimal notation,
/// trimming trailing zeros.
pub fn format_float(x: f64) -> String {
    if x == 0.0 || !x.is_finite() {
        return if x.is_finite() { "0".into() } else { x.to_string() };
    }
    let sci = format!("{:.8e}", x);
    let (mantissa, exp) = sci.split_once('e').expect("scientific format");
    let exp: i32 = exp.parse().expect("exponent");
    let negative = mantissa.starts_with('-');
    let digits: String = mantissa.chars().filter(|c| c.is_ascii_digit()).collect();
    let mut out = String::new();
    if negative {
        out.push('-');
    }
    if exp >= 0 {
        let int_len = exp as usize + 1;
        if int_len >= digits.len() {
            out.push_str(&digits);
            out.extend(std::iter::repeat_n('0', int_len - digits.len()));
        } else {
            out.push_str(&digits[..int_len]);
            out.push('.');
            out.push_str(&digits[int_len..]);
        }
    } else {
        out.push_str("0.");
        out.extend(std::iter::repeat_n('0', (-exp - 1) as usize));
        out.push_str(&digits);
    }
    if out.contains('.') {
        while out.ends_with('0') {
            out.pop();
        }
        if out.ends_with('.') {
            out.pop();
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraverseRecord {
    pub frame_index: u64,
    pub mission_time_s: f64,
    /// Rover to world.
    pub rover_pose: RigidTransform,
    pub detections: Vec<RoverFrameDetection>,
}

/// Maps canonical column names to the names used in a source table.
///
/// Text form, one entry per line, `#` starts a comment:
///
/// ```text
/// frame = frame_id
/// px = rover_x
/// ```
///
/// Canonical columns without an entry are looked up under their own name.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ColumnMapping {
    entries: HashMap<String, String>,
}

impl ColumnMapping {
    pub fn parse(text: &str) -> Result<Self, DatasetError> {
        let mut entries = HashMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| DatasetError::MalformedMapping {
                line: i + 1,
                reason: "expected `canonical = source`".into(),
            })?;
            let key = key.trim();
            let value = value.trim();
            if !TRAVERSE_COLUMNS.contains(&key) {
                return Err(DatasetError::MalformedMapping {
                    line: i + 1,
                    reason: format!("unknown canonical column `{key}`"),
                });
            }
            if value.is_empty() {
                return Err(DatasetError::MalformedMapping {
                    line: i + 1,
                    reason: format!("empty source column for `{key}`"),
                });
            }
            entries.insert(key.to_owned(), value.to_owned());
        }
        Ok(Self { entries })
    }

    pub fn load(path: &Path) -> Result<Self, DatasetError> {
        Self::parse(&fs::read_to_string(path).map_err(io_err(path))?)
    }

    pub fn source_name<'a>(&'a self, canonical: &'a str) -> &'a str {
        self.entries.get(canonical).map(String::as_str).unwrap_or(canonical)
    }
}

/// Reports CSV-level failures (ragged rows, bad UTF-8) with their line.
fn csv_error(e: csv::Error) -> DatasetError {
    let line = e.position().map(|p| p.line());
    match (line, e.kind()) {
        (Some(line), csv::ErrorKind::UnequalLengths { expected_len, len, .. }) => DatasetError::MalformedRow {
            line,
            reason: format!("expected {expected_len} fields, found {len}"),
        },
        (Some(line), _) => DatasetError::MalformedRow {
            line,
            reason: e.to_string(),
        },
        (None, _) => DatasetError::Csv(e),
    }
}

fn parse_field(field: &str, name: &str, line: u64) -> Result<f64, DatasetError> {
    let v: f64 = field.trim().parse().map_err(|_| DatasetError::MalformedRow {
        line,
        reason: format!("column `{name}`: cannot parse {field:?} as a number"),
    })?;
    if !v.is_finite() {
        return Err(DatasetError::MalformedRow {
            line,
            reason: format!("column `{name}`: non-finite value"),
        });
    }
    Ok(v)
}

/// Parses a traverse table. With no mapping the header must equal
/// [`TRAVERSE_COLUMNS`] exactly; with a mapping, columns are located by
/// their mapped names and extra columns are ignored.
pub fn parse_traverse<R: Read>(reader: R, mapping: Option<&ColumnMapping>) -> Result<Vec<TraverseRecord>, DatasetError> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(reader);
    let header = rdr.headers()?.clone();
    let columns: Vec<usize> = match mapping {
        None => {
            if header.iter().ne(TRAVERSE_COLUMNS.iter().copied()) {
                return Err(DatasetError::MalformedHeader {
                    expected: TRAVERSE_COLUMNS.join(","),
                    found: header.iter().collect::<Vec<_>>().join(","),
                });
            }
            (0..TRAVERSE_COLUMNS.len()).collect()
        }
        Some(m) => TRAVERSE_COLUMNS
            .iter()
            .map(|c| {
                let src = m.source_name(c);
                header.iter().position(|h| h.trim() == src).ok_or_else(|| DatasetError::MalformedHeader {
                    expected: format!("a column named `{src}` (for `{c}`)"),
                    found: header.iter().collect::<Vec<_>>().join(","),
                })
            })
            .collect::<Result<_, _>>()?,
    };

    let mut records: Vec<TraverseRecord> = Vec::new();
    let mut row = csv::StringRecord::new();
    while rdr.read_record(&mut row).map_err(csv_error)? {
        let line = row.position().map(|p| p.line()).unwrap_or(0);
        let get = |k: usize| row.get(columns[k]).unwrap_or("");
        let frame_field = get(0).trim();
        let frame: u64 = frame_field.parse().map_err(|_| DatasetError::MalformedRow {
            line,
            reason: format!("column `frame`: cannot parse {frame_field:?} as a frame index"),
        })?;
        let mut nums = [0.0; 8];
        for (k, slot) in nums.iter_mut().enumerate() {
            *slot = parse_field(get(k + 1), TRAVERSE_COLUMNS[k + 1], line)?;
        }
        let [time, px, py, pz, qw, qx, qy, qz] = nums;

        let det_fields: Vec<&str> = (9..13).map(|k| get(k).trim()).collect();
        let detection = if det_fields.iter().all(|f| f.is_empty()) {
            None
        } else {
            let mut d = [0.0; 4];
            for (k, slot) in d.iter_mut().enumerate() {
                *slot = parse_field(det_fields[k], TRAVERSE_COLUMNS[k + 9], line)?;
            }
            if !(d[3] > 0.0) {
                return Err(DatasetError::MalformedRow {
                    line,
                    reason: "column `det_size_m`: size must be positive".into(),
                });
            }
            Some(RoverFrameDetection {
                position: Point3::new(d[0], d[1], d[2]),
                size_m: d[3],
                source_camera: TABLE_SOURCE.into(),
            })
        };

        match records.last_mut() {
            Some(last) if last.frame_index == frame => {
                if last.detections.is_empty() || detection.is_none() {
                    return Err(DatasetError::MalformedRow {
                        line,
                        reason: format!("frame {frame} mixes an empty row with detections"),
                    });
                }
                last.detections.extend(detection);
            }
            last => {
                if let Some(prev) = last {
                    if frame <= prev.frame_index {
                        return Err(DatasetError::NonMonotonicFrames {
                            line,
                            reason: format!("frame {frame} follows frame {}", prev.frame_index),
                        });
                    }
                    if time < prev.mission_time_s {
                        return Err(DatasetError::NonMonotonicFrames {
                            line,
                            reason: format!("mission time {time} precedes {}", prev.mission_time_s),
                        });
                    }
                }
                let norm = (qw * qw + qx * qx + qy * qy + qz * qz).sqrt();
                if (norm - 1.0).abs() > QUATERNION_NORM_TOLERANCE {
                    log::warn!("line {line}: renormalizing quaternion with norm {norm}");
                }
                let rover_pose = RigidTransform::from_quaternion([qw, qx, qy, qz], Vector3::new(px, py, pz))
                    .ok_or_else(|| DatasetError::MalformedRow {
                        line,
                        reason: "zero quaternion".into(),
                    })?;
                records.push(TraverseRecord {
                    frame_index: frame,
                    mission_time_s: time,
                    rover_pose,
                    detections: detection.into_iter().collect(),
                });
            }
        }
    }
    Ok(records)
}

pub fn load_traverse(path: &Path) -> Result<Vec<TraverseRecord>, DatasetError> {
    let file = fs::File::open(path).map_err(io_err(path))?;
    parse_traverse(file, None)
}

pub fn load_traverse_mapped(path: &Path, mapping: &ColumnMapping) -> Result<Vec<TraverseRecord>, DatasetError> {
    let file = fs::File::open(path).map_err(io_err(path))?;
    parse_traverse(file, Some(mapping))
}

/// Canonical text form of a traverse.
/// Decimal quaternion components that survive load-normalize-save
/// unchanged. Rounding to 9 digits perturbs the norm, so normalizing the
/// rounded value can move its last digit; the nearest point of the 9-digit
/// lattice (within two last-digit steps per component) that normalizes back
/// onto itself is written instead.
fn canonical_quaternion(q: [f64; 4]) -> [String; 4] {
    let parse = |t: &[String; 4]| t.clone().map(|c| c.parse::<f64>().expect("formatted float parses"));
    let is_fixed = |t: &[String; 4]| {
        let v = parse(t);
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        v.map(|x| format_float(x / norm)) == *t
    };
    let rounded = q.map(format_float);
    if is_fixed(&rounded) {
        return rounded;
    }
    let base = parse(&rounded);
    let ulp = base.map(|x| if x == 0.0 { 1e-9 } else { 10f64.powi(x.abs().log10().floor() as i32 - 8) });
    let mut best: Option<(i32, [String; 4])> = None;
    for code in 0..5i32.pow(4) {
        let steps = [code % 5 - 2, code / 5 % 5 - 2, code / 25 % 5 - 2, code / 125 - 2];
        let cost: i32 = steps.iter().map(|k| k.abs()).sum();
        if best.as_ref().is_some_and(|(c, _)| *c <= cost) {
            continue;
        }
        let candidate = [0, 1, 2, 3].map(|i| format_float(base[i] + steps[i] as f64 * ulp[i]));
        if is_fixed(&candidate) {
            best = Some((cost, candidate));
        }
    }
    best.map(|(_, c)| c).unwrap_or(rounded)
}

pub fn format_traverse(records: &[TraverseRecord]) -> String {
    let mut out = TRAVERSE_COLUMNS.join(",");
    out.push('\n');
    for r in records {
        let t = r.rover_pose.translation();
        let pose = [r.mission_time_s, t.x, t.y, t.z]
            .iter()
            .map(|v| format_float(*v))
            .chain(canonical_quaternion(r.rover_pose.quaternion()))
            .collect::<Vec<_>>()
            .join(",");
        if r.detections.is_empty() {
            let _ = writeln!(out, "{},{},,,,", r.frame_index, pose);
        }
        for d in &r.detections {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{}",
                r.frame_index,
                pose,
                format_float(d.position.x),
                format_float(d.position.y),
                format_float(d.position.z),
                format_float(d.size_m)
            );
        }
    }
    out
}

pub fn save_traverse(records: &[TraverseRecord], path: &Path) -> Result<(), DatasetError> {
    fs::write(path, format_traverse(records)).map_err(io_err(path))
}

pub fn format_map(map: &ObjectMap) -> String {
    let mut out = MAP_COLUMNS.join(",");
    out.push('\n');
    for l in map.landmarks() {
        let _ = writeln!(
            out,
            "{},{},{},{},{}",
            format_float(l.position.x),
            format_float(l.position.y),
            format_float(l.position.z),
            format_float(l.size_m),
            l.observation_count
        );
    }
    out
}

pub fn save_map(map: &ObjectMap, path: &Path) -> Result<(), DatasetError> {
    fs::write(path, format_map(map)).map_err(io_err(path))
}

pub fn parse_map<R: Read>(reader: R, frame_name: &str) -> Result<ObjectMap, DatasetError> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(reader);
    let header = rdr.headers()?.clone();
    if header.iter().ne(MAP_COLUMNS.iter().copied()) {
        return Err(DatasetError::MalformedHeader {
            expected: MAP_COLUMNS.join(","),
            found: header.iter().collect::<Vec<_>>().join(","),
        });
    }
    let mut map = ObjectMap::new(frame_name);
    let mut row = csv::StringRecord::new();
    while rdr.read_record(&mut row).map_err(csv_error)? {
        let line = row.position().map(|p| p.line()).unwrap_or(0);
        let mut v = [0.0; 4];
        for (k, slot) in v.iter_mut().enumerate() {
            *slot = parse_field(row.get(k).unwrap_or(""), MAP_COLUMNS[k], line)?;
        }
        let count_field = row.get(4).unwrap_or("").trim();
        let observation_count: u32 = count_field.parse().map_err(|_| DatasetError::MalformedRow {
            line,
            reason: format!("column `observation_count`: cannot parse {count_field:?}"),
        })?;
        map.push(Landmark {
            position: Point3::new(v[0], v[1], v[2]),
            size_m: v[3],
            observation_count,
        })
        .map_err(|e| DatasetError::MalformedRow {
            line,
            reason: e.to_string(),
        })?;
    }
    Ok(map)
}

/// Loads a map CSV; the map takes the file stem as its frame name.
pub fn load_map(path: &Path) -> Result<ObjectMap, DatasetError> {
    let file = fs::File::open(path).map_err(io_err(path))?;
    let name = path.file_stem().and_then(|s| s.to_str()).unwrap_or("map");
    parse_map(file, name)
}

/// Records in `range`, in frame order.
pub fn playback(
    records: &[TraverseRecord],
    range: Range<usize>,
) -> Result<std::slice::Iter<'_, TraverseRecord>, DatasetError> {
    if range.start > range.end || range.end > records.len() {
        return Err(DatasetError::RangeOutOfBounds {
            start: range.start,
            end: range.end,
            len: records.len(),
        });
    }
    Ok(records[range].iter())
}

/// Stable merge of two traverses by mission time. Ties go to the
/// traverse with the smaller identifier, then to the first argument.
pub struct DualPlayback<'a> {
    first: (&'a str, &'a [TraverseRecord]),
    second: (&'a str, &'a [TraverseRecord]),
    i: usize,
    j: usize,
}

pub fn dual_playback<'a>(
    first: (&'a str, &'a [TraverseRecord]),
    second: (&'a str, &'a [TraverseRecord]),
) -> DualPlayback<'a> {
    DualPlayback { first, second, i: 0, j: 0 }
}

impl<'a> Iterator for DualPlayback<'a> {
    type Item = (&'a str, &'a TraverseRecord);

    fn next(&mut self) -> Option<Self::Item> {
        let a = self.first.1.get(self.i);
        let b = self.second.1.get(self.j);
        let take_first = match (a, b) {
            (None, None) => return None,
            (Some(_), None) => true,
            (None, Some(_)) => false,
            (Some(ra), Some(rb)) => match ra.mission_time_s.total_cmp(&rb.mission_time_s) {
                std::cmp::Ordering::Less => true,
                std::cmp::Ordering::Greater => false,
                std::cmp::Ordering::Equal => self.first.0 <= self.second.0,
            },
        };
        if take_first {
            self.i += 1;
            Some((self.first.0, a.expect("checked")))
        } else {
            self.j += 1;
            Some((self.second.0, b.expect("checked")))
        }
    }

    fn size_hint(&self) -> (usize, Option<usize>) {
        let n = self.first.1.len() - self.i + self.second.1.len() - self.j;
        (n, Some(n))
    }
}

/// Replays a traverse into a world-frame map of raw (unmerged) detections.
pub fn build_raw_map<'a>(records: impl IntoIterator<Item = &'a TraverseRecord>, frame_name: &str) -> ObjectMap {
    records
        .into_iter()
        .fold(ObjectMap::new(frame_name), |map, r| {
            crate::mapping::accumulate(&map, &r.rover_pose, &r.detections)
        })
}

pub fn total_detections(records: &[TraverseRecord]) -> usize {
    records.iter().map(|r| r.detections.len()).sum()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SyntheticSceneConfig {
    pub boulder_count: usize,
    /// Side of the square area, centered on the origin.
    pub area_m: f64,
    pub elevation_range_m: f64,
    pub shared_fraction: f64,
    /// Per-axis standard deviation of the independent noise on each map.
    pub position_noise_m: f64,
    pub outlier_landmarks_per_map: usize,
    /// Translation of the ground-truth transform is drawn from
    /// `[-translation_extent_m, translation_extent_m]³`.
    pub translation_extent_m: f64,
    pub min_boulder_size_m: f64,
    pub max_boulder_size_m: f64,
    pub seed: u64,
}

impl Default for SyntheticSceneConfig {
    fn default() -> Self {
        Self {
            boulder_count: 386,
            area_m: 27.0,
            elevation_range_m: 1.0,
            shared_fraction: 0.3,
            position_noise_m: 0.02,
            outlier_landmarks_per_map: 20,
            translation_extent_m: 10.0,
            min_boulder_size_m: 0.1,
            max_boulder_size_m: 0.8,
            seed: 0,
        }
    }
}

impl SyntheticSceneConfig {
    pub fn validate(&self) -> Result<(), String> {
        if self.boulder_count < 4 {
            return Err("boulder_count must be at least 4".into());
        }
        if !(0.0..=1.0).contains(&self.shared_fraction) {
            return Err("shared_fraction must lie in [0, 1]".into());
        }
        if !(self.area_m > 0.0) || !(self.elevation_range_m >= 0.0) || !(self.position_noise_m >= 0.0) {
            return Err("area must be positive, elevation range and noise nonnegative".into());
        }
        if !(self.min_boulder_size_m > 0.0 && self.min_boulder_size_m <= self.max_boulder_size_m) {
            return Err("need 0 < min_boulder_size_m <= max_boulder_size_m".into());
        }
        Ok(())
    }

    pub fn shared_count(&self) -> usize {
        (self.shared_fraction * self.boulder_count as f64).round() as usize
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticScene {
    pub map_a: ObjectMap,
    /// Expressed in a frame related to map A's by `ground_truth`.
    pub map_b: ObjectMap,
    /// Maps map-A coordinates to map-B coordinates.
    pub ground_truth: RigidTransform,
    /// `(index in map_a, index in map_b)` for every shared boulder.
    pub correspondences: Vec<(usize, usize)>,
}

/// Boulders are placed uniformly in the square with uniform elevation.
/// The first `shared_count` appear in both maps; the rest alternate between
/// A and B. Each map adds its own uniformly placed outliers, gets
/// independent Gaussian noise, and is shuffled. Map B is finally moved by a
/// random rigid transform.
pub fn generate_synthetic_scene(config: &SyntheticSceneConfig) -> SyntheticScene {
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let half = config.area_m / 2.0;
    let place = |rng: &mut ChaCha8Rng| -> (Point3, f64) {
        let p = Point3::new(
            rng.random_range(-half..=half),
            rng.random_range(-half..=half),
            rng.random::<f64>() * config.elevation_range_m,
        );
        let s = rng.random_range(config.min_boulder_size_m..=config.max_boulder_size_m);
        (p, s)
    };

    let boulders: Vec<(Point3, f64)> = (0..config.boulder_count).map(|_| place(&mut rng)).collect();
    let shared = config.shared_count().min(config.boulder_count);

    // (position, size, shared boulder id)
    let mut a: Vec<(Point3, f64, Option<usize>)> = Vec::new();
    let mut b: Vec<(Point3, f64, Option<usize>)> = Vec::new();
    for (k, &(p, s)) in boulders.iter().enumerate() {
        if k < shared {
            a.push((p, s, Some(k)));
            b.push((p, s, Some(k)));
        } else if (k - shared).is_multiple_of(2) {
            a.push((p, s, None));
        } else {
            b.push((p, s, None));
        }
    }
    for _ in 0..config.outlier_landmarks_per_map {
        let (p, s) = place(&mut rng);
        a.push((p, s, None));
    }
    for _ in 0..config.outlier_landmarks_per_map {
        let (p, s) = place(&mut rng);
        b.push((p, s, None));
    }

    if config.position_noise_m > 0.0 {
        let noise = Normal::new(0.0, config.position_noise_m).expect("valid sigma");
        for list in [&mut a, &mut b] {
            for (p, _, _) in list.iter_mut() {
                *p += Vector3::new(noise.sample(&mut rng), noise.sample(&mut rng), noise.sample(&mut rng));
            }
        }
    }
    a.shuffle(&mut rng);
    b.shuffle(&mut rng);

    let ground_truth = RigidTransform::random(&mut rng, config.translation_extent_m);

    let mut index_in_b = vec![usize::MAX; shared];
    for (j, (_, _, id)) in b.iter().enumerate() {
        if let Some(k) = id {
            index_in_b[*k] = j;
        }
    }
    let correspondences = a
        .iter()
        .enumerate()
        .filter_map(|(i, (_, _, id))| id.map(|k| (i, index_in_b[k])))
        .collect();

    let to_map = |list: &[(Point3, f64, Option<usize>)], name: &str, t: &RigidTransform| {
        ObjectMap::from_landmarks(
            name,
            list.iter().map(|(p, s, _)| Landmark::new(t.apply(p), *s)).collect(),
        )
        .expect("generated landmarks are valid")
    };
    SyntheticScene {
        map_a: to_map(&a, "synthetic_a", &RigidTransform::identity()),
        map_b: to_map(&b, "synthetic_b", &ground_truth),
        ground_truth,
        correspondences,
    }
}

/// Renders a map as a traverse in which every landmark is detected from
/// two consecutive frames. Frame `k` sees landmarks `2k .. 2k+4` (mod n)
/// from a rover placed at their centroid with a heading that advances per
/// frame. Replaying and merging the traverse restores the map.
pub fn map_to_traverse(map: &ObjectMap, frame_period_s: f64) -> Vec<TraverseRecord> {
    let n = map.len();
    if n == 0 {
        return Vec::new();
    }
    let lm = map.landmarks();
    let frames = n.div_ceil(2);
    (0..frames)
        .map(|k| {
            let ids: Vec<usize> = (0..4.min(n)).map(|o| (2 * k + o) % n).collect();
            let mut center = Vector3::zeros();
            for &i in &ids {
                center += lm[i].position.coords;
            }
            center /= ids.len() as f64;
            let pose = RigidTransform::from_axis_angle(Vector3::z(), 0.37 * k as f64, Vector3::new(center.x, center.y, 0.0));
            let inv = pose.inverse();
            TraverseRecord {
                frame_index: k as u64,
                mission_time_s: k as f64 * frame_period_s,
                rover_pose: pose,
                detections: ids
                    .iter()
                    .map(|&i| RoverFrameDetection {
                        position: inv.apply(&lm[i].position),
                        size_m: lm[i].size_m,
                        source_camera: TABLE_SOURCE.into(),
                    })
                    .collect(),
            }
        })
        .collect()
}
