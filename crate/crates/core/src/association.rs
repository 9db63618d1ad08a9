//! Graph-theoretic data association between two landmark maps.
//!
//! Every candidate association `(i, j)` pairs landmark `i` of map A with
//! landmark `j` of map B. Two candidates are consistent when they preserve
//! the distance between their endpoints to within `epsilon_m` and do not
//! share an endpoint. The consistent inlier set is the densest clique of
//! the resulting binary affinity matrix `A`:
//!
//! ```text
//! max_{u ∈ {0,1}^n}  uᵀAu / uᵀu   s.t.  u_i u_j = 0  whenever A_ij = 0
//! ```
//!
//! `A` carries a unit diagonal, so a clique of size `k` has density `k`
//! and the optimum is the maximum clique. [`solve_densest_clique`] solves a
//! continuous relaxation; [`solve_densest_clique_exact`] is an exhaustive
//! branch-and-bound used as a reference on small instances.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{CorrespondenceSet, Point3};
use crate::mapping::ObjectMap;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AssociationError {
    #[error("map is empty")]
    EmptyMap,
    #[error("refusing to associate session {0:?} with itself in the same world frame")]
    SelfComparison(String),
    #[error("no consistent set of at least two associations")]
    NoConsistentSet,
    #[error("instance has {size} candidates, exact solver cap is {cap}")]
    InstanceTooLarge { size: usize, cap: usize },
    #[error("only {found} inliers, need at least {required}")]
    TooFewInliers { found: usize, required: usize },
    #[error("invalid association config: {0}")]
    InvalidConfig(&'static str),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AssociationConfig {
    /// Distance-preservation tolerance, meters.
    pub epsilon_m: f64,
    /// Maximum ratio between landmark sizes for a candidate; `None` disables
    /// size gating.
    pub size_gate_ratio: Option<f64>,
    pub min_inliers: usize,
    /// Permit association of a `world`-frame map with another from the same
    /// session.
    pub allow_self_comparison: bool,
    /// Largest instance the exact solver accepts.
    pub exact_cap: usize,
}

impl Default for AssociationConfig {
    fn default() -> Self {
        Self {
            epsilon_m: 0.10,
            size_gate_ratio: None,
            min_inliers: 5,
            allow_self_comparison: false,
            exact_cap: 25,
        }
    }
}

impl AssociationConfig {
    pub fn validate(&self) -> Result<(), AssociationError> {
        if !(self.epsilon_m > 0.0) {
            return Err(AssociationError::InvalidConfig("epsilon_m must be positive"));
        }
        if let Some(r) = self.size_gate_ratio {
            if !(r >= 1.0) {
                return Err(AssociationError::InvalidConfig("size_gate_ratio must be at least 1"));
            }
        }
        if self.min_inliers < 3 {
            return Err(AssociationError::InvalidConfig("min_inliers must be at least 3"));
        }
        if self.exact_cap > 64 {
            return Err(AssociationError::InvalidConfig("exact_cap cannot exceed 64"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct CandidateAssociation {
    pub source_index: usize,
    pub target_index: usize,
}

impl CandidateAssociation {
    pub fn new(source_index: usize, target_index: usize) -> Self {
        Self {
            source_index,
            target_index,
        }
    }
}

/// Binary symmetric affinity matrix with unit diagonal, stored as sorted
/// off-diagonal adjacency lists.
#[derive(Debug, Clone, PartialEq)]
pub struct ConsistencyGraph {
    candidates: Vec<CandidateAssociation>,
    adjacency: Vec<Vec<u32>>,
}

impl ConsistencyGraph {
    /// Builds a graph from an undirected edge list. Self-loops are ignored
    /// (the diagonal is always one) and duplicate edges are collapsed.
    pub fn from_edges(candidates: Vec<CandidateAssociation>, edges: &[(usize, usize)]) -> Self {
        let n = candidates.len();
        let mut adjacency = vec![Vec::new(); n];
        for &(i, j) in edges {
            assert!(i < n && j < n, "edge ({i}, {j}) out of range for {n} nodes");
            if i != j {
                adjacency[i].push(j as u32);
                adjacency[j].push(i as u32);
            }
        }
        for row in &mut adjacency {
            row.sort_unstable();
            row.dedup();
        }
        Self {
            candidates,
            adjacency,
        }
    }

    /// Graph on `n` anonymous nodes; candidate indices are placeholders.
    pub fn from_edge_list(n: usize, edges: &[(usize, usize)]) -> Self {
        Self::from_edges((0..n).map(|i| CandidateAssociation::new(i, i)).collect(), edges)
    }

    pub fn len(&self) -> usize {
        self.candidates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.candidates.is_empty()
    }

    pub fn candidates(&self) -> &[CandidateAssociation] {
        &self.candidates
    }

    pub fn neighbors(&self, i: usize) -> &[u32] {
        &self.adjacency[i]
    }

    /// `A[i][j]`.
    pub fn affinity(&self, i: usize, j: usize) -> bool {
        i == j || self.adjacency[i].binary_search(&(j as u32)).is_ok()
    }

    pub fn edge_count(&self) -> usize {
        self.adjacency.iter().map(Vec::len).sum::<usize>() / 2
    }

    /// Upper-triangle off-diagonal ones, row-major.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.adjacency.iter().enumerate().flat_map(|(i, row)| {
            row.iter()
                .map(move |&j| (i, j as usize))
                .filter(|&(i, j)| i < j)
        })
    }

    /// Dense `n × n` 0/1 matrix, for inspection of small instances.
    pub fn dense(&self) -> Vec<Vec<u8>> {
        let n = self.len();
        (0..n)
            .map(|i| (0..n).map(|j| self.affinity(i, j) as u8).collect())
            .collect()
    }

    pub fn is_clique(&self, nodes: &[usize]) -> bool {
        nodes
            .iter()
            .enumerate()
            .all(|(k, &i)| nodes[k + 1..].iter().all(|&j| self.affinity(i, j)))
    }

    /// `uᵀAu / uᵀu` for the binary indicator of `nodes`.
    pub fn density(&self, nodes: &[usize]) -> f64 {
        if nodes.is_empty() {
            return 0.0;
        }
        let mut ones = 0usize;
        for &i in nodes {
            for &j in nodes {
                ones += self.affinity(i, j) as usize;
            }
        }
        ones as f64 / nodes.len() as f64
    }

    /// `y = A x`.
    fn mul(&self, x: &[f64], y: &mut [f64]) {
        for (i, (yi, row)) in y.iter_mut().zip(&self.adjacency).enumerate() {
            *yi = x[i] + row.iter().map(|&j| x[j as usize]).sum::<f64>();
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CliqueSolution {
    /// Selected candidate indices, ascending.
    pub selected: Vec<usize>,
    pub density: f64,
}

impl CliqueSolution {
    fn from_nodes(graph: &ConsistencyGraph, mut selected: Vec<usize>) -> Self {
        selected.sort_unstable();
        let density = graph.density(&selected);
        Self { selected, density }
    }
}

fn check_self_comparison(map_a: &ObjectMap, map_b: &ObjectMap, config: &AssociationConfig) -> Result<(), AssociationError> {
    if config.allow_self_comparison {
        return Ok(());
    }
    match (&map_a.session, &map_b.session) {
        (Some(a), Some(b)) if a == b && map_a.frame_name == "world" && map_b.frame_name == "world" => {
            Err(AssociationError::SelfComparison(a.clone()))
        }
        _ => Ok(()),
    }
}

/// All landmark pairs in row-major order, optionally gated by size ratio.
pub fn generate_candidates(
    map_a: &ObjectMap,
    map_b: &ObjectMap,
    config: &AssociationConfig,
) -> Result<Vec<CandidateAssociation>, AssociationError> {
    if map_a.is_empty() || map_b.is_empty() {
        return Err(AssociationError::EmptyMap);
    }
    check_self_comparison(map_a, map_b, config)?;
    let a = map_a.landmarks();
    let b = map_b.landmarks();
    let mut out = Vec::with_capacity(a.len() * b.len());
    for (i, la) in a.iter().enumerate() {
        for (j, lb) in b.iter().enumerate() {
            let keep = match config.size_gate_ratio {
                None => true,
                Some(ratio) => la.size_m.max(lb.size_m) / la.size_m.min(lb.size_m) <= ratio,
            };
            if keep {
                out.push(CandidateAssociation::new(i, j));
            }
        }
    }
    Ok(out)
}

fn distance_table(points: &[Point3]) -> Vec<f64> {
    let n = points.len();
    let mut d = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            d[i * n + j] = (points[i] - points[j]).norm();
        }
    }
    d
}

fn consistent(row_a: &[f64], row_b: &[f64], ci: &CandidateAssociation, cj: &CandidateAssociation, eps: f64) -> bool {
    cj.source_index != ci.source_index
        && cj.target_index != ci.target_index
        && (row_a[cj.source_index] - row_b[cj.target_index]).abs() <= eps
}

/// Pairwise distance-preservation affinity with the one-to-one constraint:
/// `A[i][j] = 1` iff `| ‖a_i − a_j‖ − ‖b_i − b_j‖ | ≤ ε` and the two
/// candidates share no landmark.
///
/// Rows are built in parallel; the result does not depend on scheduling.
/// For each candidate, map-B landmarks are range-searched by distance, so
/// the cost follows the number of edges rather than `n²`.
pub fn build_affinity(
    candidates: &[CandidateAssociation],
    map_a: &ObjectMap,
    map_b: &ObjectMap,
    config: &AssociationConfig,
) -> ConsistencyGraph {
    let pa: Vec<Point3> = map_a.positions().copied().collect();
    let pb: Vec<Point3> = map_b.positions().copied().collect();
    let (na, nb) = (pa.len(), pb.len());
    let da = distance_table(&pa);
    let db = distance_table(&pb);
    let eps = config.epsilon_m;

    // candidate index by (source, target); duplicates fall back to the
    // direct pairwise scan
    let mut lookup = vec![u32::MAX; na * nb];
    let mut unique = true;
    for (k, c) in candidates.iter().enumerate() {
        let slot = &mut lookup[c.source_index * nb + c.target_index];
        if *slot != u32::MAX {
            unique = false;
        }
        *slot = k as u32;
    }

    let adjacency: Vec<Vec<u32>> = if unique {
        // per target landmark: other landmarks sorted by distance
        let sorted_b: Vec<Vec<(f64, u32)>> = (0..nb)
            .map(|b| {
                let mut row: Vec<(f64, u32)> = (0..nb).map(|k| (db[b * nb + k], k as u32)).collect();
                row.sort_by(|x, y| x.0.total_cmp(&y.0).then(x.1.cmp(&y.1)));
                row
            })
            .collect();
        // margin so the range search is a superset of the exact predicate
        let slack = eps + 1e-9 * (1.0 + eps);
        candidates
            .par_iter()
            .enumerate()
            .map(|(i, ci)| {
                let row_a = &da[ci.source_index * na..(ci.source_index + 1) * na];
                let row_b = &db[ci.target_index * nb..(ci.target_index + 1) * nb];
                let by_dist = &sorted_b[ci.target_index];
                let mut out = Vec::new();
                for (a2, &d) in row_a.iter().enumerate() {
                    if a2 == ci.source_index {
                        continue;
                    }
                    let start = by_dist.partition_point(|&(x, _)| x < d - slack);
                    for &(x, b2) in &by_dist[start..] {
                        if x > d + slack {
                            break;
                        }
                        let j = lookup[a2 * nb + b2 as usize];
                        if j != u32::MAX && consistent(row_a, row_b, ci, &candidates[j as usize], eps) {
                            out.push(j);
                        }
                    }
                }
                debug_assert!(!out.contains(&(i as u32)));
                out.sort_unstable();
                out
            })
            .collect()
    } else {
        candidates
            .par_iter()
            .enumerate()
            .map(|(i, ci)| {
                let row_a = &da[ci.source_index * na..(ci.source_index + 1) * na];
                let row_b = &db[ci.target_index * nb..(ci.target_index + 1) * nb];
                candidates
                    .iter()
                    .enumerate()
                    .filter(|&(j, cj)| j != i && consistent(row_a, row_b, ci, cj, eps))
                    .map(|(j, _)| j as u32)
                    .collect()
            })
            .collect()
    };

    ConsistencyGraph {
        candidates: candidates.to_vec(),
        adjacency,
    }
}

/// Direct `O(n²)` evaluation of the affinity predicate, for cross-checking
/// [`build_affinity`].
pub fn build_affinity_pairwise(
    candidates: &[CandidateAssociation],
    map_a: &ObjectMap,
    map_b: &ObjectMap,
    config: &AssociationConfig,
) -> ConsistencyGraph {
    let pa: Vec<&Point3> = map_a.positions().collect();
    let pb: Vec<&Point3> = map_b.positions().collect();
    let n = candidates.len();
    let mut edges = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            let (ci, cj) = (candidates[i], candidates[j]);
            if ci.source_index == cj.source_index || ci.target_index == cj.target_index {
                continue;
            }
            let d_a = (pa[ci.source_index] - pa[cj.source_index]).norm();
            let d_b = (pb[ci.target_index] - pb[cj.target_index]).norm();
            if (d_a - d_b).abs() <= config.epsilon_m {
                edges.push((i, j));
            }
        }
    }
    ConsistencyGraph::from_edges(candidates.to_vec(), &edges)
}

/// Settings for the continuous relaxation solver.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RelaxationParams {
    pub power_iterations: usize,
    pub step: f64,
    pub backtrack: f64,
    pub max_line_search: usize,
    pub max_inner_iterations: usize,
    pub max_outer_iterations: usize,
    pub tol_u: f64,
    pub tol_f: f64,
    /// Entries of `u` at or below this are outside the support.
    pub support_eps: f64,
}

impl Default for RelaxationParams {
    fn default() -> Self {
        Self {
            power_iterations: 50,
            step: 1.0,
            backtrack: 0.25,
            max_line_search: 99,
            max_inner_iterations: 200,
            max_outer_iterations: 1000,
            tol_u: 1e-8,
            tol_f: 1e-9,
            support_eps: 1e-9,
        }
    }
}

/// Densest clique by continuous relaxation with default parameters.
pub fn solve_densest_clique(graph: &ConsistencyGraph) -> Result<CliqueSolution, AssociationError> {
    solve_densest_clique_with(graph, &RelaxationParams::default())
}

/// Relaxes `u` to the nonnegative unit sphere and runs projected gradient
/// ascent on `(uᵀAu − d·uᵀĀu) / (1 + d)` (`Ā = 11ᵀ − A`), raising the penalty `d`
/// between rounds until the support of `u` is a clique. The start point is
/// the principal eigenvector of `A` from a fixed-length power iteration on
/// the all-ones vector. The support is then checked against `A`, pruned to
/// a clique if needed, greedily extended to a maximal clique, and improved
/// by (1,2)-swaps.
pub fn solve_densest_clique_with(
    graph: &ConsistencyGraph,
    params: &RelaxationParams,
) -> Result<CliqueSolution, AssociationError> {
    let n = graph.len();
    if n == 0 {
        return Err(AssociationError::NoConsistentSet);
    }

    let mut u = vec![1.0 / (n as f64).sqrt(); n];
    let mut au = vec![0.0; n];
    for _ in 0..params.power_iterations {
        graph.mul(&u, &mut au);
        let norm = l2(&au);
        u.iter_mut().zip(&au).for_each(|(ui, ai)| *ui = ai / norm);
    }
    graph.mul(&u, &mut au);

    let eps = params.support_eps;
    // Ā u = (Σu)·1 − A u
    let penalty_ratio = |u: &[f64], au: &[f64]| -> Vec<f64> {
        let s: f64 = u.iter().sum();
        u.iter()
            .zip(au)
            .filter_map(|(&ui, &ai)| {
                let cbu = s - ai;
                (cbu > eps && ui > eps).then(|| ai / cbu)
            })
            .collect()
    };

    let mut d = {
        let r = penalty_ratio(&u, &au);
        if r.is_empty() {
            0.0
        } else {
            r.iter().sum::<f64>() / r.len() as f64
        }
    };

    // uᵀAu − d·uᵀĀu scaled by 1/(1+d): same maximizer, but the gradient
    // keeps unit scale as the penalty grows, so the step needs no retuning.
    let objective = |u: &[f64], au: &[f64], d: f64| -> f64 {
        let s: f64 = u.iter().sum();
        let quad: f64 = u.iter().zip(au).map(|(a, b)| a * b).sum();
        quad - d / (1.0 + d) * s * s
    };

    let mut grad = vec![0.0; n];
    let mut trial = vec![0.0; n];
    let mut trial_au = vec![0.0; n];
    let mut support: Vec<usize> = Vec::new();
    for _ in 0..params.max_outer_iterations {
        let mut f = objective(&u, &au, d);
        for _ in 0..params.max_inner_iterations {
            let s: f64 = u.iter().sum();
            grad.iter_mut()
                .zip(&au)
                .for_each(|(g, &ai)| *g = ai - d / (1.0 + d) * s);

            let mut alpha = params.step;
            let mut f_new = f;
            for _ in 0..params.max_line_search {
                for ((t, &ui), &gi) in trial.iter_mut().zip(&u).zip(&grad) {
                    *t = (ui + alpha * gi).max(0.0);
                }
                let norm = l2(&trial);
                if norm > 0.0 {
                    trial.iter_mut().for_each(|t| *t /= norm);
                    graph.mul(&trial, &mut trial_au);
                    f_new = objective(&trial, &trial_au, d);
                    if f_new >= f - 1e-12 {
                        break;
                    }
                }
                alpha *= params.backtrack;
            }
            if !(l2(&trial) > 0.0) {
                break;
            }
            let du = trial
                .iter()
                .zip(&u)
                .map(|(a, b)| (a - b) * (a - b))
                .sum::<f64>()
                .sqrt();
            let df = (f_new - f).abs();
            std::mem::swap(&mut u, &mut trial);
            std::mem::swap(&mut au, &mut trial_au);
            f = f_new;
            if du < params.tol_u && df < params.tol_f {
                break;
            }
        }

        let r = penalty_ratio(&u, &au);
        if r.is_empty() {
            break;
        }
        // Interchangeable non-adjacent vertices form a symmetric saddle that
        // a larger penalty only shrinks geometrically; once the support stops
        // changing, leave the tie to the rounding below.
        let current: Vec<usize> = (0..n).filter(|&i| u[i] > eps).collect();
        if current == support {
            break;
        }
        support = current;
        d += r.iter().fold(0.0f64, |m, &x| m.max(x.abs()));
    }

    // Visit in decreasing weight; ties by index.
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| u[b].total_cmp(&u[a]).then(a.cmp(&b)));
    let mut selected: Vec<usize> = Vec::new();
    for &i in order.iter().take_while(|&&i| u[i] > eps) {
        if selected.iter().all(|&j| graph.affinity(i, j)) {
            selected.push(i);
        }
    }
    extend_clique(graph, &mut selected, &order);
    let selected = swap_improve(graph, selected, &order);

    if selected.len() < 2 {
        return Err(AssociationError::NoConsistentSet);
    }
    debug_assert!(graph.is_clique(&selected));
    Ok(CliqueSolution::from_nodes(graph, selected))
}

/// Greedily extends `clique` to a maximal clique, visiting `order`.
fn extend_clique(graph: &ConsistencyGraph, clique: &mut Vec<usize>, order: &[usize]) {
    let mut member = vec![false; graph.len()];
    clique.iter().for_each(|&i| member[i] = true);
    for &i in order {
        if !member[i] && clique.iter().all(|&j| graph.affinity(i, j)) {
            clique.push(i);
            member[i] = true;
        }
    }
}

/// (1,2)-swap local search: while some member `u` is the only obstacle to
/// two mutually adjacent outside vertices, replace `u` by both and extend.
/// Every swap grows the clique, so the loop terminates.
fn swap_improve(graph: &ConsistencyGraph, mut clique: Vec<usize>, order: &[usize]) -> Vec<usize> {
    let n = graph.len();
    loop {
        let k = clique.len();
        let mut member = vec![false; n];
        clique.iter().for_each(|&i| member[i] = true);
        let mut hits = vec![0usize; n];
        for &c in &clique {
            for &v in graph.neighbors(c) {
                hits[v as usize] += 1;
            }
        }
        // outside vertices adjacent to all members but one, keyed by that one
        let mut blocked: Vec<Vec<usize>> = vec![Vec::new(); k];
        for &v in order {
            if !member[v] && k > 0 && hits[v] == k - 1 {
                let slot = clique.iter().position(|&c| !graph.affinity(c, v)).expect("one member is not adjacent");
                blocked[slot].push(v);
            }
        }
        let swap = blocked.iter().enumerate().find_map(|(slot, group)| {
            group.iter().enumerate().find_map(|(x, &a)| {
                group[x + 1..].iter().find(|&&b| graph.affinity(a, b)).map(|&b| (slot, a, b))
            })
        });
        let Some((slot, a, b)) = swap else {
            return clique;
        };
        clique.swap_remove(slot);
        clique.push(a);
        clique.push(b);
        extend_clique(graph, &mut clique, order);
    }
}

fn l2(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Maximum clique by branch and bound over bitsets, visiting vertices in
/// index order with the include branch first, so the first maximum clique
/// found is the lexicographically smallest. Pruning uses a greedy coloring
/// bound.
pub fn solve_densest_clique_exact(graph: &ConsistencyGraph, cap: usize) -> Result<CliqueSolution, AssociationError> {
    let n = graph.len();
    let cap = cap.min(64);
    if n > cap {
        return Err(AssociationError::InstanceTooLarge { size: n, cap });
    }
    if n == 0 {
        return Ok(CliqueSolution {
            selected: Vec::new(),
            density: 0.0,
        });
    }
    let masks: Vec<u64> = (0..n)
        .map(|i| graph.neighbors(i).iter().fold(0u64, |m, &j| m | (1u64 << j)))
        .collect();

    struct Search<'a> {
        masks: &'a [u64],
        best: u64,
        best_len: u32,
    }

    fn color_bound(masks: &[u64], mut cand: u64) -> u32 {
        let mut colors = 0;
        while cand != 0 {
            colors += 1;
            let mut avail = cand;
            while avail != 0 {
                let v = avail.trailing_zeros() as usize;
                avail &= !(1u64 << v) & !masks[v];
                cand &= !(1u64 << v);
            }
        }
        colors
    }

    impl Search<'_> {
        fn expand(&mut self, current: u64, len: u32, mut cand: u64) {
            if len > self.best_len {
                self.best = current;
                self.best_len = len;
            }
            while cand != 0 {
                if len + color_bound(self.masks, cand) <= self.best_len {
                    return;
                }
                let v = cand.trailing_zeros() as usize;
                let bit = 1u64 << v;
                self.expand(current | bit, len + 1, cand & self.masks[v] & !bit);
                cand &= !bit;
            }
        }
    }

    let all = if n == 64 { u64::MAX } else { (1u64 << n) - 1 };
    let mut search = Search {
        masks: &masks,
        best: 0,
        best_len: 0,
    };
    search.expand(0, 0, all);
    let selected = (0..n).filter(|&i| search.best & (1u64 << i) != 0).collect();
    Ok(CliqueSolution::from_nodes(graph, selected))
}

/// Correspondences `(a, b)` for the selected candidates, in selected order.
pub fn extract_inliers(
    solution: &CliqueSolution,
    candidates: &[CandidateAssociation],
    map_a: &ObjectMap,
    map_b: &ObjectMap,
    min_inliers: usize,
) -> Result<CorrespondenceSet, AssociationError> {
    if solution.selected.len() < min_inliers {
        return Err(AssociationError::TooFewInliers {
            found: solution.selected.len(),
            required: min_inliers,
        });
    }
    let a = map_a.landmarks();
    let b = map_b.landmarks();
    let pairs = solution
        .selected
        .iter()
        .map(|&k| {
            let c = candidates[k];
            (a[c.source_index].position, b[c.target_index].position)
        })
        .collect();
    CorrespondenceSet::new(pairs).map_err(|_| AssociationError::TooFewInliers {
        found: 0,
        required: min_inliers,
    })
}
