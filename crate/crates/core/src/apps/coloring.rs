//! Coloring graphs with sparse neighborhoods using fewer than `Δ + 1` colors.
//!
//! Phase one looks for a (not necessarily proper) coloring in which every
//! vertex has more than `Z` stable colors in its neighborhood. Phase two
//! uncolors every vertex on a monochromatic edge and recolors greedily.

use std::collections::{BTreeMap, HashMap};
use std::sync::Arc;

use crate::apps::AppError;
use crate::csp::{Assignment, Constraint, Instance, ProductMeasure, ScopePredicate, Value};
use crate::lca::{LcaSession, QueryOutcome};
use crate::lll::Psi;

/// A simple undirected graph with sorted adjacency lists.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Graph {
    adj: Vec<Vec<usize>>,
}

impl Graph {
    /// Repeated edges are merged; self loops are rejected.
    pub fn new(n: usize, edges: &[(usize, usize)]) -> Result<Self, AppError> {
        let mut adj = vec![Vec::new(); n];
        for &(a, b) in edges {
            for v in [a, b] {
                if v >= n {
                    return Err(AppError::VertexOutOfRange { vertex: v, n });
                }
            }
            if a == b {
                return Err(AppError::SelfLoop(a));
            }
            adj[a].push(b);
            adj[b].push(a);
        }
        for list in &mut adj {
            list.sort_unstable();
            list.dedup();
        }
        Ok(Graph { adj })
    }

    pub fn num_vertices(&self) -> usize {
        self.adj.len()
    }

    pub fn neighbors(&self, v: usize) -> &[usize] {
        &self.adj[v]
    }

    pub fn degree(&self, v: usize) -> usize {
        self.adj[v].len()
    }

    pub fn max_degree(&self) -> usize {
        self.adj.iter().map(Vec::len).max().unwrap_or(0)
    }

    pub fn has_edge(&self, a: usize, b: usize) -> bool {
        self.adj[a].binary_search(&b).is_ok()
    }

    /// Each edge once, as `(a, b)` with `a < b`.
    pub fn edges(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for (a, list) in self.adj.iter().enumerate() {
            out.extend(list.iter().filter(|&&b| a < b).map(|&b| (a, b)));
        }
        out
    }

    /// Number of edges with both ends in `N(v)`.
    pub fn neighborhood_edges(&self, v: usize) -> usize {
        let nv = &self.adj[v];
        nv.iter().map(|&a| self.adj[a].iter().filter(|&&b| a < b && nv.binary_search(&b).is_ok()).count()).sum()
    }

    /// `min_v [C(Δ,2) - e(N(v))]`, the largest admissible `B`.
    pub fn neighborhood_deficiency(&self) -> usize {
        let delta = self.max_degree();
        let full = delta * delta.saturating_sub(1) / 2;
        (0..self.num_vertices()).map(|v| full - self.neighborhood_edges(v)).min().unwrap_or(full)
    }

    /// Vertices at distance at most 2 from `v`, ascending, including `v`.
    pub fn distance2_ball(&self, v: usize) -> Vec<usize> {
        let mut out = vec![v];
        for &a in &self.adj[v] {
            out.push(a);
            out.extend_from_slice(&self.adj[a]);
        }
        out.sort_unstable();
        out.dedup();
        out
    }

    /// Whether some edge at `v` is monochromatic under `color`.
    fn on_monochromatic_edge(&self, v: usize, color: &impl Fn(usize) -> Value) -> bool {
        let c = color(v);
        self.adj[v].iter().any(|&u| color(u) == c)
    }

    pub fn is_proper(&self, colors: &[Value]) -> bool {
        self.edges().iter().all(|&(a, b)| colors[a] != colors[b])
    }
}

/// Counts colors `c` held by two non-adjacent neighbors of the center such
/// that no neighbor holding `c` lies on a monochromatic edge. Indices are in
/// whatever space `neighbors`, `adj` and `color` share.
fn stable_count<'a>(neighbors: &[usize], adj: impl Fn(usize) -> &'a [usize], color: impl Fn(usize) -> Value) -> usize {
    // color -> (holders, some holder is on a monochromatic edge)
    let mut by_color: BTreeMap<Value, (Vec<usize>, bool)> = BTreeMap::new();
    for &u in neighbors {
        let c = color(u);
        let mono = adj(u).iter().any(|&w| color(w) == c);
        let entry = by_color.entry(c).or_default();
        entry.0.push(u);
        entry.1 |= mono;
    }
    by_color
        .values()
        .filter(|(holders, mono)| {
            !mono && holders.iter().enumerate().any(|(i, &a)| holders[i + 1..].iter().any(|&b| !adj(a).contains(&b)))
        })
        .count()
}

/// `X_v`, the number of stable colors at `v`.
pub fn stable_color_count(g: &Graph, colors: &[Value], v: usize) -> usize {
    stable_count(g.neighbors(v), |u| g.neighbors(u), |u| colors[u])
}

/// `X_v ≤ Z`, evaluated on the values of the distance-2 scope of `v`.
#[derive(Debug)]
struct FewStableColors {
    /// Scope positions of the neighbors of the center.
    neighbors: Vec<usize>,
    /// Scope-position adjacency lists for the neighbors (empty for others).
    adj: Vec<Vec<usize>>,
    z: f64,
}

impl ScopePredicate for FewStableColors {
    fn violated(&self, values: &[Value]) -> bool {
        (stable_count(&self.neighbors, |u| &self.adj[u], |u| values[u]) as f64) <= self.z
    }
}

#[derive(Clone, Debug)]
pub struct ColoringSetup {
    pub instance: Instance,
    pub measure: ProductMeasure,
    pub psi: Psi,
    pub delta: usize,
    pub b: f64,
    /// `Z = B / (e⁶ Δ)`.
    pub z: f64,
    /// `⌊Δ + 1 - Z⌋` colors.
    pub palette: usize,
    /// The vertex each constraint belongs to.
    pub constraint_vertex: Vec<usize>,
}

/// One variable per vertex over the palette and one constraint per vertex,
/// over its distance-2 ball, violated when `X_v ≤ Z`. Vertices with no two
/// non-adjacent neighbors can never have a stable color, so they get no
/// constraint and are left to the greedy phase.
pub fn coloring_instance(g: &Graph, b: f64) -> Result<ColoringSetup, AppError> {
    let delta = g.max_degree();
    if delta < 2 {
        return Err(AppError::DegreeTooSmall(delta));
    }
    let allowed = (delta * (delta - 1) / 2) as f64 - b;
    for v in 0..g.num_vertices() {
        let edges = g.neighborhood_edges(v);
        if edges as f64 > allowed {
            return Err(AppError::DenseNeighborhood { vertex: v, edges, allowed });
        }
    }
    let z = b / (std::f64::consts::E.powi(6) * delta as f64);
    let palette = (delta as f64 + 1.0 - z).floor();
    if palette < 1.0 {
        return Err(AppError::EmptyPalette);
    }
    let palette = palette as usize;
    let mut constraints = Vec::new();
    let mut constraint_vertex = Vec::new();
    for v in 0..g.num_vertices() {
        let nv = g.neighbors(v);
        let has_open_pair = nv.iter().enumerate().any(|(i, &a)| nv[i + 1..].iter().any(|&c| !g.has_edge(a, c)));
        if !has_open_pair {
            continue;
        }
        let scope = g.distance2_ball(v);
        let pos = |u: usize| scope.binary_search(&u).expect("within distance 2");
        let mut adj = vec![Vec::new(); scope.len()];
        for &a in nv {
            adj[pos(a)] = g.neighbors(a).iter().map(|&w| pos(w)).collect();
        }
        let predicate = FewStableColors { neighbors: nv.iter().map(|&a| pos(a)).collect(), adj, z };
        constraints.push(Constraint::predicate(scope, Arc::new(predicate)));
        constraint_vertex.push(v);
    }
    let instance = Instance::new(vec![palette; g.num_vertices()], constraints)?;
    let measure = ProductMeasure::uniform(instance.domains());
    let d4 = (delta as f64).powi(4);
    let psi = Psi::constant(instance.num_constraints(), 1.0 / (d4 - 1.0))?;
    Ok(ColoringSetup { instance, measure, psi, delta, b, z, palette, constraint_vertex })
}

/// Uncolors every vertex on a monochromatic edge, then colors those
/// vertices in ascending order with the smallest color not used by a
/// colored neighbor.
pub fn uncolor_and_greedy(g: &Graph, colors: &[Value], palette: usize) -> Result<Vec<Value>, AppError> {
    let color = |u: usize| colors[u];
    let uncolored: Vec<bool> = (0..g.num_vertices()).map(|v| g.on_monochromatic_edge(v, &color)).collect();
    let mut out: Vec<Option<Value>> = (0..g.num_vertices()).map(|v| (!uncolored[v]).then_some(colors[v])).collect();
    for v in 0..g.num_vertices() {
        if uncolored[v] {
            let c = smallest_free(g.neighbors(v).iter().filter_map(|&u| out[u]), palette).ok_or(AppError::GreedyStuck(v))?;
            out[v] = Some(c);
        }
    }
    Ok(out.into_iter().map(|c| c.expect("every vertex colored")).collect())
}

fn smallest_free(used: impl Iterator<Item = Value>, palette: usize) -> Option<Value> {
    let mut taken = vec![false; palette];
    for c in used {
        if (c as usize) < palette {
            taken[c as usize] = true;
        }
    }
    taken.iter().position(|t| !t).map(|c| c as Value)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ColoringAnswer {
    /// `None` when the underlying session aborted.
    pub color: Option<Value>,
    /// The vertex was on a monochromatic edge and got a greedy color.
    pub guessed_uncolored: bool,
    pub resamples: u64,
}

/// Query-by-query coloring: phase-one colors from an LCA session, phase-two
/// greedy colors assigned in query order.
pub struct ColoringLca<'a> {
    session: LcaSession<'a>,
    graph: &'a Graph,
    palette: usize,
    answers: HashMap<usize, Value>,
    /// Greedy colors of vertices guessed to be uncolored.
    recorded: HashMap<usize, Value>,
}

impl<'a> ColoringLca<'a> {
    pub fn new(session: LcaSession<'a>, graph: &'a Graph, palette: usize) -> Self {
        ColoringLca { session, graph, palette, answers: HashMap::new(), recorded: HashMap::new() }
    }

    pub fn session(&self) -> &LcaSession<'a> {
        &self.session
    }

    pub fn answers(&self) -> &HashMap<usize, Value> {
        &self.answers
    }

    pub fn query(&mut self, v: usize) -> Result<ColoringAnswer, AppError> {
        let result = self.session.query(v)?;
        if result.outcome == QueryOutcome::Abort {
            return Ok(ColoringAnswer { color: None, guessed_uncolored: false, resamples: result.resamples });
        }
        if let Some(&c) = self.answers.get(&v) {
            return Ok(ColoringAnswer { color: Some(c), guessed_uncolored: self.recorded.contains_key(&v), resamples: result.resamples });
        }
        // vertices in no constraint scope are only sampled once queried
        let mut resamples = result.resamples;
        let mut needed: Vec<usize> = self.graph.distance2_ball(v);
        needed.retain(|&u| self.session.state().get(u).is_none());
        for u in needed {
            let r = self.session.query(u)?;
            resamples += r.resamples;
            if r.outcome == QueryOutcome::Abort {
                return Ok(ColoringAnswer { color: None, guessed_uncolored: false, resamples });
            }
        }
        let state = self.session.state();
        let color = |u: usize| state.get(u).ok_or(AppError::Uncolored(u));
        let own = color(v)?;
        let mut mono = false;
        for &u in self.graph.neighbors(v) {
            mono |= color(u)? == own;
        }
        let answer = if !mono {
            own
        } else {
            // neighbors keep their phase-one color unless they are on a
            // monochromatic edge; those count only once recorded
            let mut used = Vec::new();
            for &u in self.graph.neighbors(v) {
                if let Some(&c) = self.recorded.get(&u) {
                    used.push(c);
                } else {
                    let cu = color(u)?;
                    let mut u_mono = false;
                    for &w in self.graph.neighbors(u) {
                        u_mono |= color(w)? == cu;
                    }
                    if !u_mono {
                        used.push(cu);
                    }
                }
            }
            let c = smallest_free(used.into_iter(), self.palette).ok_or(AppError::GreedyStuck(v))?;
            self.recorded.insert(v, c);
            c
        };
        self.answers.insert(v, answer);
        Ok(ColoringAnswer { color: Some(answer), guessed_uncolored: mono, resamples })
    }

    /// Whether every pair of adjacent answered vertices got different colors.
    pub fn answers_proper(&self) -> bool {
        self.answers.iter().all(|(&v, &c)| self.graph.neighbors(v).iter().all(|u| self.answers.get(u).is_none_or(|&cu| cu != c)))
    }
}

/// State of the coloring problem as an assignment, for running the engine
/// from a given coloring.
pub fn coloring_assignment(colors: &[Value]) -> Assignment {
    Assignment::from_values(colors.to_vec())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lca::LcaConfig;
    use crate::rng::substream;
    use proptest::prelude::*;
    use rand::Rng;

    fn path3() -> Graph {
        // a - v - b with v = 1
        Graph::new(3, &[(0, 1), (1, 2)]).unwrap()
    }

    #[test]
    fn stable_color_examples() {
        let g = path3();
        assert_eq!(stable_color_count(&g, &[1, 0, 1], 1), 1);
        // the two neighbors share v's color, so both sit on monochromatic edges
        assert_eq!(stable_color_count(&g, &[1, 1, 1], 1), 0);
        // a triangle has no non-adjacent pair
        let tri = Graph::new(3, &[(0, 1), (1, 2), (0, 2)]).unwrap();
        assert_eq!(stable_color_count(&tri, &[0, 1, 0], 1), 0);
    }

    #[test]
    fn zero_threshold_predicate() {
        // star with three leaves; B = 3 so Z = 3/(e⁶·3) < 1
        let g = Graph::new(4, &[(0, 1), (0, 2), (0, 3)]).unwrap();
        let s = coloring_instance(&g, 3.0).unwrap();
        assert_eq!(s.palette, 3);
        assert_eq!(s.constraint_vertex, vec![0]);
        let i = 0;
        assert!(!s.instance.violated(i, &coloring_assignment(&[0, 1, 1, 2])).unwrap());
        assert!(s.instance.violated(i, &coloring_assignment(&[0, 1, 2, 0])).unwrap());
        assert!((s.psi.get(0) - 1.0 / 80.0).abs() < 1e-15);
        let setup0 = coloring_instance(&g, 0.0).unwrap();
        assert_eq!(setup0.z, 0.0);
        assert_eq!(setup0.palette, 4);
    }

    #[test]
    fn instance_errors() {
        let g = Graph::new(2, &[(0, 1)]).unwrap();
        assert_eq!(coloring_instance(&g, 0.0).unwrap_err(), AppError::DegreeTooSmall(1));
        let tri = Graph::new(3, &[(0, 1), (1, 2), (0, 2)]).unwrap();
        assert!(matches!(coloring_instance(&tri, 1.0), Err(AppError::DenseNeighborhood { .. })));
        assert!(matches!(Graph::new(2, &[(1, 1)]), Err(AppError::SelfLoop(1))));
    }

    #[test]
    fn greedy_examples() {
        let g = path3();
        assert_eq!(uncolor_and_greedy(&g, &[0, 1, 0], 2).unwrap(), vec![0, 1, 0]);
        // single monochromatic edge 0-1 in a path with a spare color
        let fixed = uncolor_and_greedy(&g, &[0, 0, 1], 3).unwrap();
        assert!(g.is_proper(&fixed));
        assert_eq!(fixed, vec![0, 2, 1]);
        let k3 = Graph::new(3, &[(0, 1), (1, 2), (0, 2)]).unwrap();
        assert_eq!(uncolor_and_greedy(&k3, &[0, 0, 0], 2), Err(AppError::GreedyStuck(2)));
    }

    #[test]
    fn lca_guesses_respect_recorded_colors() {
        // K_{2,2} plus a pendant: 0,1 | 2,3 and 3 - 4
        let g = Graph::new(5, &[(0, 2), (0, 3), (1, 2), (1, 3), (3, 4)]).unwrap();
        let setup = coloring_instance(&g, 0.0).unwrap();
        for trial in 0..200 {
            let config = LcaConfig::new(5, 0.5, 0.5).radius(5).budget(10_000).seed(7, trial);
            let session = LcaSession::open(&setup.instance, &setup.measure, &setup.psi, &config).unwrap();
            let mut lca = ColoringLca::new(session, &g, setup.palette);
            for v in 0..5 {
                let a = lca.query(v).unwrap();
                if a.color.is_none() {
                    break;
                }
            }
            if !lca.session().is_aborted() {
                assert!(lca.answers_proper(), "trial {trial}");
            }
        }
    }

    #[test]
    fn adjacent_guessed_vertices_get_different_colors() {
        // an edge 0-1 whose ends start with the same color: both are guessed uncolored
        let g = Graph::new(2, &[(0, 1)]).unwrap();
        let inst = Instance::new(vec![3, 3], vec![]).unwrap();
        let mu = ProductMeasure::new(vec![vec![1.0, 0.0, 0.0]; 2]).unwrap();
        let params = crate::lll::Params { epsilon: 0.5, zeta: 1.0, eta: 0.0, xi: 0.0, lambda: 0.0, k: 0, d: 0, n: 2, m: 0, polylog_c: 1.0 };
        let session = LcaSession::open_with_params(&inst, &mu, params, &LcaConfig::new(3, 0.9, 0.5)).unwrap();
        let mut lca = ColoringLca::new(session, &g, 3);
        let a = lca.query(0).unwrap();
        let b = lca.query(1).unwrap();
        assert!(a.guessed_uncolored && b.guessed_uncolored);
        assert_eq!(a.color, Some(0));
        assert_eq!(b.color, Some(1));
        assert_eq!(a.resamples, 0);
    }

    fn random_graph(n: usize, p: f64, seed: u64) -> Graph {
        let mut rng = substream(seed, &[]);
        let mut edges = Vec::new();
        for a in 0..n {
            for b in a + 1..n {
                if rng.gen_bool(p) {
                    edges.push((a, b));
                }
            }
        }
        Graph::new(n, &edges).unwrap()
    }

    proptest! {
        #[test]
        fn stable_count_matches_brute_force(n in 3usize..30, p in 0.05f64..0.6, seed in any::<u64>(), palette in 2u32..6) {
            let g = random_graph(n, p, seed);
            let mut rng = substream(seed, &[1]);
            let colors: Vec<Value> = (0..n).map(|_| rng.gen_range(0..palette)).collect();
            for v in 0..n {
                let mut count = 0;
                for c in 0..palette {
                    let holders: Vec<usize> = g.neighbors(v).iter().copied().filter(|&u| colors[u] == c).collect();
                    let open_pair = holders.iter().any(|&a| holders.iter().any(|&b| a != b && !g.has_edge(a, b)));
                    let clean = holders.iter().all(|&u| g.neighbors(u).iter().all(|&w| colors[w] != colors[u]));
                    if open_pair && clean {
                        count += 1;
                    }
                }
                prop_assert_eq!(stable_color_count(&g, &colors, v), count);
            }
        }

        #[test]
        fn predicate_matches_graph_count(n in 3usize..25, p in 0.1f64..0.5, seed in any::<u64>()) {
            let g = random_graph(n, p, seed);
            prop_assume!(g.max_degree() >= 2);
            let b = g.neighborhood_deficiency() as f64;
            let setup = coloring_instance(&g, b).unwrap();
            let mut rng = substream(seed, &[2]);
            let colors: Vec<Value> = (0..n).map(|_| rng.gen_range(0..setup.palette as Value)).collect();
            let state = coloring_assignment(&colors);
            for (i, &v) in setup.constraint_vertex.iter().enumerate() {
                let expected = stable_color_count(&g, &colors, v) as f64 <= setup.z;
                prop_assert_eq!(setup.instance.violated(i, &state).unwrap(), expected);
            }
        }

        #[test]
        fn greedy_output_is_proper_when_it_succeeds(n in 2usize..40, p in 0.05f64..0.5, seed in any::<u64>(), palette in 1usize..8) {
            let g = random_graph(n, p, seed);
            let mut rng = substream(seed, &[3]);
            let colors: Vec<Value> = (0..n).map(|_| rng.gen_range(0..palette as Value)).collect();
            if let Ok(out) = uncolor_and_greedy(&g, &colors, palette) {
                prop_assert!(g.is_proper(&out));
            }
        }
    }
}
