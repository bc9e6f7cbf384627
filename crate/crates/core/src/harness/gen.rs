//! Seeded instance generators.

use rand::seq::SliceRandom;
use rand::Rng;

use crate::apps::coloring::Graph;
use crate::apps::hypergraph::Hypergraph;
use crate::apps::sat::{CnfFormula, Literal};
use crate::apps::AppError;
use crate::rng::substream;

const KSAT_STREAM: u64 = 1;
const GNP_STREAM: u64 = 2;
const CLUSTER_STREAM: u64 = 3;
const HYPERGRAPH_STREAM: u64 = 4;

/// Swap passes before the occurrence-capped generator gives up.
const MAX_REPAIR_ROUNDS: usize = 1000;

/// A random exact-`k` CNF on `n` variables where every variable occurs in
/// exactly `d` clauses when `k` divides `n·d`, with `⌊n·d/k⌋` clauses.
/// Signs are uniform.
pub fn gen_ksat(n: usize, k: usize, d: usize, seed: u64) -> Result<CnfFormula, AppError> {
    if k == 0 {
        return Err(AppError::Infeasible("k must be positive".into()));
    }
    gen_ksat_with_clauses(n, k, d, n * d / k, seed)
}

/// `m` random exact-`k` clauses with no variable occurring more than `d`
/// times and no variable repeated inside a clause.
pub fn gen_ksat_with_clauses(n: usize, k: usize, d: usize, m: usize, seed: u64) -> Result<CnfFormula, AppError> {
    if k == 0 || k > n {
        return Err(AppError::Infeasible(format!("k = {k} with n = {n}")));
    }
    if m * k > n * d {
        return Err(AppError::Infeasible(format!("{m} clauses of width {k} need {} occurrences, cap allows {}", m * k, n * d)));
    }
    let mut rng = substream(seed, &[KSAT_STREAM, n as u64, k as u64, d as u64, m as u64]);
    // every variable gets d slots; the first m·k slots after shuffling are used
    let mut slots: Vec<usize> = (0..n).flat_map(|x| std::iter::repeat_n(x, d)).collect();
    slots.shuffle(&mut rng);
    let used = m * k;
    let clause_has = |slots: &[usize], c: usize, x: usize, skip: usize| (c * k..c * k + k).any(|p| p != skip && slots[p] == x);
    for _ in 0..MAX_REPAIR_ROUNDS {
        let mut clean = true;
        for p in 0..used {
            let c = p / k;
            if !clause_has(&slots, c, slots[p], p) {
                continue;
            }
            clean = false;
            // swap with a random slot whose variable fits here and vice versa
            let q = rng.gen_range(0..slots.len());
            let fits_here = !clause_has(&slots, c, slots[q], p);
            let fits_there = q >= used || !clause_has(&slots, q / k, slots[p], q);
            if fits_here && fits_there && q / k != c {
                slots.swap(p, q);
            }
        }
        if clean {
            let clauses: Vec<Vec<Literal>> = slots[..used].chunks(k).map(|c| c.iter().map(|&x| (x, rng.gen_bool(0.5))).collect()).collect();
            return CnfFormula::new(n, clauses);
        }
    }
    Err(AppError::Infeasible(format!("could not place {m} clauses without repeated variables")))
}

/// Erdős–Rényi `G(n, p)`.
pub fn gen_gnp(n: usize, p: f64, seed: u64) -> Result<Graph, AppError> {
    if !(0.0..=1.0).contains(&p) {
        return Err(AppError::Infeasible(format!("edge probability {p}")));
    }
    let mut rng = substream(seed, &[GNP_STREAM, n as u64]);
    let mut edges = Vec::new();
    for a in 0..n {
        for b in a + 1..n {
            if rng.gen_bool(p) {
                edges.push((a, b));
            }
        }
    }
    Graph::new(n, &edges)
}

/// `clusters` disjoint random bipartite graphs with `side` vertices on each
/// side and edge probability `p`. Cluster `c` owns vertices
/// `2·side·c .. 2·side·(c+1)`, left side first.
pub fn gen_clustered_bipartite(clusters: usize, side: usize, p: f64, seed: u64) -> Result<Graph, AppError> {
    if !(0.0..=1.0).contains(&p) {
        return Err(AppError::Infeasible(format!("edge probability {p}")));
    }
    let mut rng = substream(seed, &[CLUSTER_STREAM, clusters as u64, side as u64]);
    let mut edges = Vec::new();
    for c in 0..clusters {
        let base = 2 * side * c;
        for a in 0..side {
            for b in 0..side {
                if rng.gen_bool(p) {
                    edges.push((base + a, base + side + b));
                }
            }
        }
    }
    Graph::new(2 * side * clusters, &edges)
}

/// For each `(size, count)`, `count` edges on `size` uniformly chosen vertices.
pub fn gen_hypergraph(n: usize, edge_sizes: &[(usize, usize)], seed: u64) -> Result<Hypergraph, AppError> {
    let mut rng = substream(seed, &[HYPERGRAPH_STREAM, n as u64]);
    let mut edges = Vec::new();
    let vertices: Vec<usize> = (0..n).collect();
    for &(size, count) in edge_sizes {
        if size > n {
            return Err(AppError::Infeasible(format!("edge size {size} with {n} vertices")));
        }
        for _ in 0..count {
            edges.push(vertices.choose_multiple(&mut rng, size).copied().collect());
        }
    }
    Hypergraph::new(n, edges)
}
