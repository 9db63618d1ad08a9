//! `segloc`: build landmark maps from traverse detection tables, localize
//! one map against another, evaluate traverse pairs, and generate synthetic
//! scenes.
//!
//! Exit codes: 0 success, 1 I/O or configuration error, 2 localization
//! rejected.

// `!(x > 0.0)` is used deliberately so that NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod config;
mod plot;

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};
use log::{info, warn};
use rayon::prelude::*;
use segloc::dataset::{self, format_float, ColumnMapping};
use segloc::localization::{evaluate_pair, evaluation_report, localize_traced, EvaluationRow};
use segloc::mapping::{map_bounds, merge_duplicates};
use segloc::{LocalizationError, LocalizationResult, ObjectMap, RigidTransform};
use serde::Serialize;

use crate::config::RunConfig;
use crate::plot::Layer;

const DEFAULT_PAIRS: &str = "3:5,3:7,5:7,5:12,7:12";

#[derive(Parser)]
#[command(name = "segloc", version, about = "Segment-based global localization between landmark maps")]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// TOML configuration file layered over the built-in defaults.
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,
    /// Override a configuration value, e.g. `--set association.epsilon_m=0.05`.
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    overrides: Vec<String>,
    /// Seed for the evaluation perturbation and the synthetic generator.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output path (file or directory, depending on the command).
    #[arg(long, global = true, value_name = "PATH")]
    out: Option<PathBuf>,
    /// Write an SVG plot to this path.
    #[arg(long, global = true, value_name = "FILE")]
    plot: Option<PathBuf>,
    /// Increase log verbosity (repeatable).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,
}

#[derive(Subcommand)]
enum Command {
    /// Merge the detections of a traverse into a landmark map CSV
    /// (default output `map.csv`).
    BuildMap {
        traverse: PathBuf,
    },
    /// Estimate the transform from the vehicle map frame to the reference
    /// map frame (JSON result written to `--out` when given).
    Localize {
        map_vehicle: PathBuf,
        map_reference: PathBuf,
        /// Write the consistency graph as `i,j` rows, one per edge.
        #[arg(long, value_name = "FILE")]
        dump_affinity: Option<PathBuf>,
    },
    /// Evaluate traverse pairs found under a data directory (report CSV
    /// written to `--out` when given; the table always goes to stdout).
    Eval {
        data_root: PathBuf,
        /// Comma-separated `a:b` pairs of traverse identifiers; an empty
        /// string yields a header-only report.
        #[arg(long, default_value = DEFAULT_PAIRS)]
        pairs: String,
    },
    /// Generate a synthetic two-traverse scene into a directory (default
    /// `synth`).
    Synth,
}

/// Outcome of a command that ran to completion.
enum Status {
    Success,
    Rejected,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.common.verbose {
        0 => log::LevelFilter::Warn,
        1 => log::LevelFilter::Info,
        _ => log::LevelFilter::Debug,
    };
    env_logger::Builder::new().filter_level(level).format_timestamp(None).init();

    match run(&cli) {
        Ok(Status::Success) => ExitCode::SUCCESS,
        Ok(Status::Rejected) => ExitCode::from(2),
        Err(e) => {
            eprintln!("error: {}", describe(&e));
            ExitCode::from(1)
        }
    }
}

/// Joins the error chain, skipping causes already quoted by their parent.
fn describe(e: &anyhow::Error) -> String {
    let mut out = String::new();
    for cause in e.chain() {
        let text = cause.to_string();
        if !out.contains(&text) {
            if !out.is_empty() {
                out.push_str(": ");
            }
            out.push_str(&text);
        }
    }
    out
}

fn run(cli: &Cli) -> Result<Status> {
    let c = &cli.common;
    let config = RunConfig::resolve(c.config.as_deref(), &c.overrides, c.seed)?;
    match &cli.command {
        Command::BuildMap { traverse } => build_map(&config, traverse, c.out.as_deref(), c.plot.as_deref()),
        Command::Localize {
            map_vehicle,
            map_reference,
            dump_affinity,
        } => localize(&config, map_vehicle, map_reference, dump_affinity.as_deref(), c.out.as_deref(), c.plot.as_deref()),
        Command::Eval { data_root, pairs } => eval(&config, data_root, pairs, c.out.as_deref(), c.plot.as_deref()),
        Command::Synth => synth(&config, c.out.as_deref(), c.plot.as_deref()),
    }
}

fn write(path: &Path, contents: &str) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    fs::write(path, contents).with_context(|| format!("writing {}", path.display()))
}

fn landmarks(map: &ObjectMap) -> Vec<(segloc::Point3, f64)> {
    map.landmarks().iter().map(|l| (l.position, l.size_m)).collect()
}

fn build_map(config: &RunConfig, traverse: &Path, out: Option<&Path>, plot: Option<&Path>) -> Result<Status> {
    let records = match &config.dataset.column_mapping {
        Some(m) => dataset::load_traverse_mapped(traverse, &ColumnMapping::load(m)?)?,
        None => dataset::load_traverse(traverse)?,
    };
    let session = traverse.file_stem().and_then(|s| s.to_str()).unwrap_or("traverse");
    let raw = dataset::build_raw_map(&records, "world").with_session(session);
    let map = merge_duplicates(&raw, &config.merge);
    info!("{} frames, {} detections", records.len(), raw.len());

    let out = out.unwrap_or(Path::new("map.csv"));
    write(out, &dataset::format_map(&map))?;
    if map.is_empty() {
        warn!("{} yielded no landmarks; wrote an empty map", traverse.display());
    }
    println!("landmarks: {}", map.len());
    match map_bounds(&map) {
        Ok(b) => println!(
            "bounds: min ({}, {}, {}) max ({}, {}, {})",
            format_float(b.min.x),
            format_float(b.min.y),
            format_float(b.min.z),
            format_float(b.max.x),
            format_float(b.max.y),
            format_float(b.max.z)
        ),
        Err(_) => println!("bounds: none"),
    }
    if let Some(p) = plot {
        let layer = Layer {
            label: session,
            color: "#3a6ea5",
            points: landmarks(&map),
        };
        write(p, &plot::scatter(&format!("Landmarks of {session}"), &[layer], &[]))?;
    }
    Ok(Status::Success)
}

/// Schema of the `localize` JSON result.
#[derive(Serialize)]
struct LocalizeReport<'a> {
    map_vehicle: String,
    map_reference: String,
    /// Row-major homogeneous matrix, vehicle frame to reference frame.
    matrix: [[f64; 4]; 4],
    quaternion_wxyz: [f64; 4],
    translation: [f64; 3],
    candidate_count: usize,
    clique_size: usize,
    inlier_count: usize,
    density: f64,
    residual_rms_m: f64,
    suspect: bool,
    /// `[vehicle landmark index, reference landmark index]`
    associations: Vec<[usize; 2]>,
    config: &'a RunConfig,
}

fn matrix_rows(t: &RigidTransform) -> [[f64; 4]; 4] {
    let h = t.to_homogeneous();
    std::array::from_fn(|r| std::array::from_fn(|c| h[(r, c)]))
}

fn localize(
    config: &RunConfig,
    map_vehicle: &Path,
    map_reference: &Path,
    dump_affinity: Option<&Path>,
    out: Option<&Path>,
    plot: Option<&Path>,
) -> Result<Status> {
    let veh = dataset::load_map(map_vehicle)?;
    let reference = dataset::load_map(map_reference)?;
    let trace = match localize_traced(&veh, &reference, &config.association) {
        Ok(t) => t,
        Err(LocalizationError::Rejected(e)) => return rejected(&e),
        Err(e) => return Err(e.into()),
    };
    if let Some(path) = dump_affinity {
        let mut csv = String::from("i,j\n");
        for (i, j) in trace.graph.edges() {
            csv.push_str(&format!("{i},{j}\n"));
        }
        write(path, &csv)?;
    }
    let result: LocalizationResult = match trace.result {
        Ok(r) => r,
        Err(LocalizationError::Rejected(e)) => return rejected(&e),
        Err(e) => return Err(e.into()),
    };

    let matrix = matrix_rows(&result.transform);
    println!("T_vehicle_to_reference =");
    for row in &matrix {
        println!("  {}", row.iter().map(|v| format!("{v:>13.9}")).collect::<Vec<_>>().join(" "));
    }
    println!(
        "inliers: {} of {} candidates (clique {}), residual rms {:.4} m{}",
        result.inlier_count,
        result.candidate_count,
        result.clique_size,
        result.residual_rms_m,
        if result.suspect { " [suspect]" } else { "" }
    );

    if let Some(path) = out {
        let t = result.transform.translation();
        let report = LocalizeReport {
            map_vehicle: map_vehicle.display().to_string(),
            map_reference: map_reference.display().to_string(),
            matrix,
            quaternion_wxyz: result.transform.quaternion(),
            translation: [t.x, t.y, t.z],
            candidate_count: result.candidate_count,
            clique_size: result.clique_size,
            inlier_count: result.inlier_count,
            density: result.density,
            residual_rms_m: result.residual_rms_m,
            suspect: result.suspect,
            associations: result.associations.iter().map(|a| [a.source_index, a.target_index]).collect(),
            config,
        };
        write(path, &(serde_json::to_string_pretty(&report)? + "\n"))?;
    }
    if let Some(path) = plot {
        let moved = veh.transformed(&result.transform);
        let links: Vec<_> = result
            .associations
            .iter()
            .map(|a| (moved.landmarks()[a.source_index].position, reference.landmarks()[a.target_index].position))
            .collect();
        let layers = [
            Layer {
                label: "reference",
                color: "#3a6ea5",
                points: landmarks(&reference),
            },
            Layer {
                label: "vehicle (aligned)",
                color: "#d1495b",
                points: landmarks(&moved),
            },
        ];
        write(path, &plot::scatter("Aligned maps and inlier associations", &layers, &links))?;
    }
    Ok(Status::Success)
}

fn rejected(e: &dyn std::fmt::Display) -> Result<Status> {
    eprintln!("localization rejected: {e}");
    Ok(Status::Rejected)
}

fn parse_pairs(list: &str) -> Result<Vec<(String, String)>> {
    list.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|p| {
            let (a, b) = p.split_once(':').with_context(|| format!("pair `{p}` is not of the form a:b"))?;
            Ok((a.trim().to_string(), b.trim().to_string()))
        })
        .collect()
}

fn eval(config: &RunConfig, data_root: &Path, pairs: &str, out: Option<&Path>, plot: Option<&Path>) -> Result<Status> {
    let pairs = parse_pairs(pairs)?;
    let eval_config = config.evaluation();
    if let Some(m) = &eval_config.column_mapping {
        ColumnMapping::load(m)?;
    }
    // Collected in input order regardless of completion order.
    let rows: Vec<EvaluationRow> = pairs
        .par_iter()
        .map(|(a, b)| evaluate_pair(a, b, data_root, &eval_config))
        .collect();
    for row in &rows {
        if let Some(detail) = &row.detail {
            warn!("{}-{}: {detail}", row.path_a, row.path_b);
        }
    }
    let report = evaluation_report(&rows);
    print!("{}", report.table);
    if let Some(path) = out {
        write(path, &report.csv)?;
        let provenance = path.with_extension("txt");
        write(&provenance, &format!("{}\n# configuration\n{}", report.table, config.to_toml()))?;
    }
    if let Some(path) = plot {
        write(path, &plot::rmse_bars(&rows))?;
    }
    Ok(Status::Success)
}

/// Schema of `ground_truth.json` written by `synth`.
#[derive(Serialize)]
struct GroundTruth<'a> {
    /// Maps traverse A's world frame to traverse B's world frame, which is
    /// the vehicle-to-reference transform when A is the vehicle map.
    matrix: [[f64; 4]; 4],
    quaternion_wxyz: [f64; 4],
    translation: [f64; 3],
    shared_landmarks: usize,
    config: &'a RunConfig,
}

fn synth(config: &RunConfig, out: Option<&Path>, plot: Option<&Path>) -> Result<Status> {
    let dir = out.unwrap_or(Path::new("synth"));
    let scene = dataset::generate_synthetic_scene(&config.synth.scene);
    let period = config.synth.frame_period_s;
    write(&dir.join("traverse_a.csv"), &dataset::format_traverse(&dataset::map_to_traverse(&scene.map_a, period)))?;
    write(&dir.join("traverse_b.csv"), &dataset::format_traverse(&dataset::map_to_traverse(&scene.map_b, period)))?;

    let t = scene.ground_truth.translation();
    let gt = GroundTruth {
        matrix: matrix_rows(&scene.ground_truth),
        quaternion_wxyz: scene.ground_truth.quaternion(),
        translation: [t.x, t.y, t.z],
        shared_landmarks: scene.correspondences.len(),
        config,
    };
    write(&dir.join("ground_truth.json"), &(serde_json::to_string_pretty(&gt)? + "\n"))?;

    let mut labels = String::from("index_a,index_b,ax,ay,az,bx,by,bz\n");
    for &(i, j) in &scene.correspondences {
        let (a, b) = (&scene.map_a.landmarks()[i].position, &scene.map_b.landmarks()[j].position);
        let cells = [a.x, a.y, a.z, b.x, b.y, b.z].map(format_float);
        labels.push_str(&format!("{i},{j},{}\n", cells.join(",")));
    }
    write(&dir.join("labels.csv"), &labels)?;
    println!(
        "wrote {}: {} + {} landmarks, {} shared",
        dir.display(),
        scene.map_a.len(),
        scene.map_b.len(),
        scene.correspondences.len()
    );
    if let Some(path) = plot {
        let layers = [
            Layer {
                label: "map A",
                color: "#3a6ea5",
                points: landmarks(&scene.map_a),
            },
            Layer {
                label: "map B in A's frame",
                color: "#d1495b",
                points: landmarks(&scene.map_b.transformed(&scene.ground_truth.inverse())),
            },
        ];
        write(path, &plot::scatter("Synthetic scene", &layers, &[]))?;
    }
    Ok(Status::Success)
}
