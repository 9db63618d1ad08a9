//! Helpers shared by the integration tests: independent reference
//! implementations and instance generators.

#![allow(dead_code)]

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use segloc::association::ConsistencyGraph;
use segloc::geometry::Point3;
use segloc::mapping::{Landmark, ObjectMap};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Erdős–Rényi graph on `n` nodes.
pub fn random_graph(rng: &mut impl Rng, n: usize, p: f64) -> ConsistencyGraph {
    let mut edges = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            if rng.random_bool(p) {
                edges.push((i, j));
            }
        }
    }
    ConsistencyGraph::from_edge_list(n, &edges)
}

/// Random graph with a clique planted on `k` random nodes; returns the
/// graph and the planted members, ascending.
pub fn planted_clique(rng: &mut impl Rng, n: usize, k: usize, p: f64) -> (ConsistencyGraph, Vec<usize>) {
    let mut nodes: Vec<usize> = (0..n).collect();
    nodes.shuffle(rng);
    let mut planted = nodes[..k].to_vec();
    planted.sort_unstable();
    let mut edges = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            let both = planted.binary_search(&i).is_ok() && planted.binary_search(&j).is_ok();
            if both || rng.random_bool(p) {
                edges.push((i, j));
            }
        }
    }
    (ConsistencyGraph::from_edge_list(n, &edges), planted)
}

/// Maximum cliques by enumerating every subset of the nodes. Returns the
/// maximum size and the lexicographically smallest maximum clique.
pub fn brute_force_max_clique(graph: &ConsistencyGraph) -> (usize, Vec<usize>) {
    let n = graph.len();
    assert!(n <= 20, "subset enumeration is only for tiny graphs");
    let mut best: Vec<usize> = Vec::new();
    for mask in 0u32..(1u32 << n) {
        let nodes: Vec<usize> = (0..n).filter(|&i| mask & (1 << i) != 0).collect();
        let clique = nodes
            .iter()
            .enumerate()
            .all(|(k, &i)| nodes[k + 1..].iter().all(|&j| graph.affinity(i, j)));
        if clique && (nodes.len() > best.len() || (nodes.len() == best.len() && nodes < best)) {
            best = nodes;
        }
    }
    (best.len(), best)
}

pub fn map_from(name: &str, points: &[Point3], size: f64) -> ObjectMap {
    ObjectMap::from_landmarks(name, points.iter().map(|p| Landmark::new(*p, size)).collect()).unwrap()
}

pub fn random_points(rng: &mut impl Rng, n: usize, extent: f64) -> Vec<Point3> {
    (0..n)
        .map(|_| {
            Point3::new(
                rng.random_range(-extent..extent),
                rng.random_range(-extent..extent),
                rng.random_range(-extent..extent),
            )
        })
        .collect()
}

/// Pixels of a filled ellipse with semi-axes `a` (along `u` after rotation
/// by `angle`) and `b`, centered at `(cu, cv)`.
pub fn raster_ellipse(cu: f64, cv: f64, a: f64, b: f64, angle: f64) -> Vec<(u32, u32)> {
    let (s, c) = angle.sin_cos();
    let r = a.max(b).ceil() as i64 + 1;
    let mut out = Vec::new();
    for dv in -r..=r {
        for du in -r..=r {
            let (u, v) = (cu.round() as i64 + du, cv.round() as i64 + dv);
            let (x, y) = (u as f64 - cu, v as f64 - cv);
            let (xr, yr) = (c * x + s * y, -s * x + c * y);
            if (xr / a).powi(2) + (yr / b).powi(2) <= 1.0 {
                out.push((u as u32, v as u32));
            }
        }
    }
    out
}
