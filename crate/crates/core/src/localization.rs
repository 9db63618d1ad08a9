//! End-to-end map-to-map localization and the traverse-pair evaluation
//! harness.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::association::{
    build_affinity, extract_inliers, generate_candidates, solve_densest_clique, AssociationConfig, AssociationError,
    CandidateAssociation, ConsistencyGraph,
};
use crate::dataset::{self, ColumnMapping, DatasetError};
use crate::geometry::{estimate_rigid_transform, rotation_error_rad, translation_rmse, CorrespondenceSet, GeometryError, RigidTransform};
use crate::mapping::{merge_duplicates, MergeConfig, ObjectMap};

#[derive(Debug, Error)]
pub enum LocalizationError {
    #[error("localization rejected: {0}")]
    Rejected(AssociationError),
    #[error(transparent)]
    Association(AssociationError),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}

impl From<AssociationError> for LocalizationError {
    fn from(e: AssociationError) -> Self {
        match e {
            AssociationError::TooFewInliers { .. } | AssociationError::NoConsistentSet => Self::Rejected(e),
            other => Self::Association(other),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LocalizationResult {
    /// Vehicle map frame to reference map frame.
    pub transform: RigidTransform,
    pub inliers: CorrespondenceSet,
    pub associations: Vec<CandidateAssociation>,
    pub candidate_count: usize,
    /// Size of the densest clique before residual refinement.
    pub clique_size: usize,
    pub inlier_count: usize,
    pub density: f64,
    pub residual_rms_m: f64,
    /// Set when `residual_rms_m` exceeds the sanity ceiling.
    pub suspect: bool,
}

/// Residual RMS above `RESIDUAL_CEILING_FACTOR · epsilon_m` marks a result
/// as suspect.
pub const RESIDUAL_CEILING_FACTOR: f64 = 3.0;

/// Floor of the refinement gate, as a fraction of `epsilon_m`.
const REFINE_FLOOR_FRACTION: f64 = 1e-4;
const REFINE_MAX_ROUNDS: usize = 10;

fn point_residuals(inliers: &CorrespondenceSet, transform: &RigidTransform) -> Vec<f64> {
    inliers
        .pairs()
        .iter()
        .map(|(a, b)| (b - transform.apply(a)).norm())
        .collect()
}

/// `min(ε, max(3·median residual, 1e-4·ε))`.
fn residual_gate(residuals: &[f64], config: &AssociationConfig) -> f64 {
    let mut sorted = residuals.to_vec();
    sorted.sort_by(f64::total_cmp);
    let median = sorted[sorted.len() / 2];
    (3.0 * median)
        .max(REFINE_FLOOR_FRACTION * config.epsilon_m)
        .min(config.epsilon_m)
}

/// Adds candidates left out of the clique whose point residual under the
/// refined transform is within the refinement gate, nearest first and one
/// to one, then refits. Two landmarks closer than `ε` can swap partners
/// without breaking distance consistency, so the clique may hold the wrong
/// pairing of such a couple (or tie with the right one); refinement drops
/// it and this step restores the right one.
fn reassociate(
    transform: RigidTransform,
    inliers: CorrespondenceSet,
    mut associations: Vec<CandidateAssociation>,
    candidates: &[CandidateAssociation],
    map_veh: &ObjectMap,
    map_ref: &ObjectMap,
    config: &AssociationConfig,
) -> Result<(RigidTransform, CorrespondenceSet, Vec<CandidateAssociation>), LocalizationError> {
    let gate = residual_gate(&point_residuals(&inliers, &transform), config);
    let (a, b) = (map_veh.landmarks(), map_ref.landmarks());
    let mut used_a = vec![false; a.len()];
    let mut used_b = vec![false; b.len()];
    for c in &associations {
        used_a[c.source_index] = true;
        used_b[c.target_index] = true;
    }
    let mut extra: Vec<(f64, usize)> = candidates
        .iter()
        .enumerate()
        .filter(|(_, c)| !used_a[c.source_index] && !used_b[c.target_index])
        .map(|(k, c)| ((b[c.target_index].position - transform.apply(&a[c.source_index].position)).norm(), k))
        .filter(|&(r, _)| r <= gate)
        .collect();
    if extra.is_empty() {
        return Ok((transform, inliers, associations));
    }
    extra.sort_by(|x, y| x.0.total_cmp(&y.0).then(x.1.cmp(&y.1)));
    let mut pairs = inliers.pairs().to_vec();
    for (_, k) in extra {
        let c = candidates[k];
        if !used_a[c.source_index] && !used_b[c.target_index] {
            used_a[c.source_index] = true;
            used_b[c.target_index] = true;
            associations.push(c);
            pairs.push((a[c.source_index].position, b[c.target_index].position));
        }
    }
    let inliers = CorrespondenceSet::new(pairs)?;
    Ok((estimate_rigid_transform(&inliers)?, inliers, associations))
}

/// Drops correspondences whose residual exceeds
/// `min(ε, max(3·median residual, 1e-4·ε))` and refits until nothing is
/// dropped. Distance consistency cannot separate a decoy pair that agrees
/// with every inlier to within `ε` (or that ties the true clique); such a
/// pair shows up as a point residual far above the rest.
fn refine(
    inliers: CorrespondenceSet,
    associations: Vec<CandidateAssociation>,
    config: &AssociationConfig,
) -> Result<(RigidTransform, CorrespondenceSet, Vec<CandidateAssociation>), LocalizationError> {
    let mut transform = estimate_rigid_transform(&inliers)?;
    let mut inliers = inliers;
    let mut associations = associations;
    for _ in 0..REFINE_MAX_ROUNDS {
        let residuals = point_residuals(&inliers, &transform);
        let gate = residual_gate(&residuals, config);
        if residuals.iter().all(|&r| r <= gate) {
            break;
        }
        let keep: Vec<usize> = (0..residuals.len()).filter(|&k| residuals[k] <= gate).collect();
        if keep.len() < config.min_inliers {
            return Err(LocalizationError::Rejected(AssociationError::TooFewInliers {
                found: keep.len(),
                required: config.min_inliers,
            }));
        }
        inliers = CorrespondenceSet::new(keep.iter().map(|&k| inliers.pairs()[k]).collect())?;
        associations = keep.iter().map(|&k| associations[k]).collect();
        transform = estimate_rigid_transform(&inliers)?;
    }
    Ok((transform, inliers, associations))
}

/// Candidates, affinity, and the result; exposed for diagnostics and the
/// affinity dump.
pub struct LocalizationTrace {
    pub graph: ConsistencyGraph,
    pub result: Result<LocalizationResult, LocalizationError>,
}

/// Aligns `map_veh` to `map_ref`: all-pairs candidates, distance-consistency
/// affinity, densest clique, then a least-squares rigid fit over the
/// inliers with residual-gated refitting.
pub fn localize(map_veh: &ObjectMap, map_ref: &ObjectMap, config: &AssociationConfig) -> Result<LocalizationResult, LocalizationError> {
    localize_traced(map_veh, map_ref, config)?.result
}

pub fn localize_traced(
    map_veh: &ObjectMap,
    map_ref: &ObjectMap,
    config: &AssociationConfig,
) -> Result<LocalizationTrace, LocalizationError> {
    config.validate()?;
    let smaller = map_veh.len().min(map_ref.len());
    if smaller == 0 {
        return Err(AssociationError::EmptyMap.into());
    }
    if smaller < config.min_inliers {
        return Err(LocalizationError::Rejected(AssociationError::TooFewInliers {
            found: smaller,
            required: config.min_inliers,
        }));
    }
    let candidates = generate_candidates(map_veh, map_ref, config)?;
    let graph = build_affinity(&candidates, map_veh, map_ref, config);
    let result = finish(&graph, &candidates, map_veh, map_ref, config);
    Ok(LocalizationTrace { graph, result })
}

fn finish(
    graph: &ConsistencyGraph,
    candidates: &[CandidateAssociation],
    map_veh: &ObjectMap,
    map_ref: &ObjectMap,
    config: &AssociationConfig,
) -> Result<LocalizationResult, LocalizationError> {
    let solution = solve_densest_clique(graph)?;
    let inliers = extract_inliers(&solution, candidates, map_veh, map_ref, config.min_inliers)?;
    let associations = solution.selected.iter().map(|&k| candidates[k]).collect();
    let (transform, inliers, associations) = refine(inliers, associations, config)?;
    let (transform, inliers, associations) =
        reassociate(transform, inliers, associations, candidates, map_veh, map_ref, config)?;
    let residual_rms_m = inliers.residual_rms(&transform);
    Ok(LocalizationResult {
        transform,
        associations,
        candidate_count: candidates.len(),
        clique_size: solution.selected.len(),
        inlier_count: inliers.len(),
        density: solution.density,
        residual_rms_m,
        suspect: residual_rms_m > RESIDUAL_CEILING_FACTOR * config.epsilon_m,
        inliers,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EvaluationConfig {
    pub association: AssociationConfig,
    pub merge: MergeConfig,
    /// Seed for the rigid offset applied to the vehicle map.
    pub seed: u64,
    /// Translation of the offset is drawn from `[-x, x]³`; zero together
    /// with `perturb = false` leaves the map untouched.
    pub perturbation_translation_m: f64,
    pub perturb: bool,
    /// Traverse file name with `{id}` replaced by the traverse identifier.
    pub file_pattern: String,
    /// Optional column-mapping file for published tables.
    pub column_mapping: Option<PathBuf>,
}

impl Default for EvaluationConfig {
    fn default() -> Self {
        Self {
            association: AssociationConfig::default(),
            merge: MergeConfig::default(),
            seed: 0,
            perturbation_translation_m: 5.0,
            perturb: true,
            file_pattern: "traverse_{id}.csv".into(),
            column_mapping: None,
        }
    }
}

impl EvaluationConfig {
    pub fn traverse_path(&self, data_root: &Path, id: &str) -> PathBuf {
        data_root.join(self.file_pattern.replace("{id}", id))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EvaluationStatus {
    Ok,
    Rejected,
    Missing,
    Error,
}

impl EvaluationStatus {
    pub fn as_str(&self) -> &'static str {
        match self {
            Self::Ok => "ok",
            Self::Rejected => "rejected",
            Self::Missing => "missing",
            Self::Error => "error",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationRow {
    pub path_a: String,
    pub path_b: String,
    pub segs_a: usize,
    pub segs_b: usize,
    pub candidates: usize,
    pub inliers: usize,
    pub density: f64,
    pub rmse_cm: Option<f64>,
    pub rot_err_deg: Option<f64>,
    pub status: EvaluationStatus,
    /// Human-readable reason for a non-ok status.
    pub detail: Option<String>,
}

impl EvaluationRow {
    fn failed(path_a: &str, path_b: &str, status: EvaluationStatus, detail: String) -> Self {
        Self {
            path_a: path_a.into(),
            path_b: path_b.into(),
            segs_a: 0,
            segs_b: 0,
            candidates: 0,
            inliers: 0,
            density: 0.0,
            rmse_cm: None,
            rot_err_deg: None,
            status,
            detail: Some(detail),
        }
    }
}

/// Builds a merged world-frame map from a traverse file.
pub fn build_merged_map(path: &Path, id: &str, config: &EvaluationConfig) -> Result<ObjectMap, DatasetError> {
    let records = match &config.column_mapping {
        Some(m) => dataset::load_traverse_mapped(path, &ColumnMapping::load(m)?)?,
        None => dataset::load_traverse(path)?,
    };
    let raw = dataset::build_raw_map(&records, "world").with_session(id);
    Ok(merge_duplicates(&raw, &config.merge))
}

/// Localizes a seeded rigid perturbation of `map_a` against `map_b` and
/// scores how well the perturbation is recovered.
pub fn evaluate_maps(traverse_a: &str, traverse_b: &str, map_a: &ObjectMap, map_b: &ObjectMap, config: &EvaluationConfig) -> EvaluationRow {
    // Vehicle map lives in a frame offset by `applied⁻¹`, so the ideal
    // vehicle-to-reference transform is `applied` itself.
    let applied = if config.perturb {
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        RigidTransform::random(&mut rng, config.perturbation_translation_m)
    } else {
        RigidTransform::identity()
    };
    let map_veh = map_a.transformed(&applied.inverse());

    let mut row = EvaluationRow {
        path_a: traverse_a.into(),
        path_b: traverse_b.into(),
        segs_a: map_a.len(),
        segs_b: map_b.len(),
        candidates: map_a.len() * map_b.len(),
        inliers: 0,
        density: 0.0,
        rmse_cm: None,
        rot_err_deg: None,
        status: EvaluationStatus::Ok,
        detail: None,
    };
    match localize(&map_veh, map_b, &config.association) {
        Ok(res) => {
            row.candidates = res.candidate_count;
            row.inliers = res.inlier_count;
            row.density = res.density;
            row.rmse_cm = Some(100.0 * translation_rmse(&res.transform, &applied));
            row.rot_err_deg = Some(rotation_error_rad(&res.transform, &applied).to_degrees());
            if res.suspect {
                row.detail = Some(format!("suspect: residual rms {:.4} m", res.residual_rms_m));
            }
        }
        Err(LocalizationError::Rejected(e)) => {
            row.status = EvaluationStatus::Rejected;
            row.detail = Some(e.to_string());
        }
        Err(e) => {
            row.status = EvaluationStatus::Error;
            row.detail = Some(e.to_string());
        }
    }
    row
}

/// Evaluates one traverse pair read from `data_root`. Missing files and
/// rejected localizations become rows with the matching status.
pub fn evaluate_pair(traverse_a: &str, traverse_b: &str, data_root: &Path, config: &EvaluationConfig) -> EvaluationRow {
    let pa = config.traverse_path(data_root, traverse_a);
    let pb = config.traverse_path(data_root, traverse_b);
    for p in [&pa, &pb] {
        if !p.is_file() {
            return EvaluationRow::failed(traverse_a, traverse_b, EvaluationStatus::Missing, format!("{} not found", p.display()));
        }
    }
    let maps = build_merged_map(&pa, traverse_a, config).and_then(|a| Ok((a, build_merged_map(&pb, traverse_b, config)?)));
    match maps {
        Ok((a, b)) => evaluate_maps(traverse_a, traverse_b, &a, &b, config),
        Err(e) => EvaluationRow::failed(traverse_a, traverse_b, EvaluationStatus::Error, e.to_string()),
    }
}

/// Runs [`evaluate_pair`] once per seed and returns the rows together with
/// the mean RMSE over successful runs.
pub fn evaluate_pair_seeds(
    traverse_a: &str,
    traverse_b: &str,
    data_root: &Path,
    config: &EvaluationConfig,
    seeds: &[u64],
) -> (Vec<EvaluationRow>, Option<f64>) {
    let rows: Vec<EvaluationRow> = seeds
        .iter()
        .map(|&seed| {
            let cfg = EvaluationConfig { seed, ..config.clone() };
            evaluate_pair(traverse_a, traverse_b, data_root, &cfg)
        })
        .collect();
    let ok: Vec<f64> = rows.iter().filter_map(|r| r.rmse_cm).collect();
    let mean = (!ok.is_empty()).then(|| ok.iter().sum::<f64>() / ok.len() as f64);
    (rows, mean)
}

pub const REPORT_COLUMNS: [&str; 10] = [
    "path_a",
    "path_b",
    "segs_a",
    "segs_b",
    "candidates",
    "inliers",
    "density",
    "rmse_cm",
    "rot_err_deg",
    "status",
];

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EvaluationReport {
    pub csv: String,
    pub table: String,
}

fn opt(v: Option<f64>, decimals: usize) -> String {
    v.map(|x| format!("{x:.decimals$}")).unwrap_or_default()
}

/// CSV and aligned-text renderings of evaluation rows, in input order.
/// RMSE is printed in centimeters with two decimals.
pub fn evaluation_report(rows: &[EvaluationRow]) -> EvaluationReport {
    let cells: Vec<[String; 10]> = rows
        .iter()
        .map(|r| {
            [
                r.path_a.clone(),
                r.path_b.clone(),
                r.segs_a.to_string(),
                r.segs_b.to_string(),
                r.candidates.to_string(),
                r.inliers.to_string(),
                format!("{:.3}", r.density),
                opt(r.rmse_cm, 2),
                opt(r.rot_err_deg, 3),
                r.status.as_str().to_string(),
            ]
        })
        .collect();

    let mut csv = REPORT_COLUMNS.join(",");
    csv.push('\n');
    for c in &cells {
        csv.push_str(&c.join(","));
        csv.push('\n');
    }

    let headers = ["Path 1", "Path 2", "Segs in 1", "Segs in 2", "Candidates", "Ain", "Density", "RMSE [cm]", "Rot [deg]", "Status"];
    let widths: Vec<usize> = (0..headers.len())
        .map(|k| cells.iter().map(|c| c[k].len()).chain([headers[k].len()]).max().unwrap_or(0))
        .collect();
    let mut table = String::new();
    let line = |table: &mut String, items: &[&str]| {
        let joined = items
            .iter()
            .zip(&widths)
            .map(|(s, w)| format!("{s:>w$}"))
            .collect::<Vec<_>>()
            .join("  ");
        let _ = writeln!(table, "{}", joined.trim_end());
    };
    line(&mut table, &headers);
    let rule: Vec<String> = widths.iter().map(|w| "-".repeat(*w)).collect();
    line(&mut table, &rule.iter().map(String::as_str).collect::<Vec<_>>());
    for c in &cells {
        line(&mut table, &c.iter().map(String::as_str).collect::<Vec<_>>());
    }
    EvaluationReport { csv, table }
}
