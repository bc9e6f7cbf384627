//! Witness trees of resampling runs and the branching process that
//! dominates them.

use std::collections::{BTreeSet, HashMap};
use std::fmt;
use std::rc::Rc;

use rand::Rng;
use thiserror::Error;

use crate::csp::{CspError, Instance, ProductMeasure};
use crate::lll::Psi;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum WitnessError {
    #[error(transparent)]
    Csp(#[from] CspError),
    #[error("vertex labeled {child} cannot be a child of a vertex labeled {parent}")]
    InvalidChild { parent: usize, child: usize },
    #[error("vertex labeled {0} has two children with the same label")]
    RepeatedSibling(usize),
    #[error("enumeration would exceed {0} trees")]
    TooMany(usize),
    #[error("malformed tree encoding at byte {0}")]
    Parse(usize),
}

/// A rooted unordered tree labeled by constraint indices, stored with
/// children in canonical order so that derived equality is tree equality.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct WitnessTree {
    label: usize,
    children: Vec<WitnessTree>,
}

impl WitnessTree {
    pub fn leaf(label: usize) -> Self {
        WitnessTree { label, children: Vec::new() }
    }

    pub fn new(label: usize, mut children: Vec<WitnessTree>) -> Self {
        children.sort_by_cached_key(|c| c.encode());
        WitnessTree { label, children }
    }

    pub fn label(&self) -> usize {
        self.label
    }

    pub fn children(&self) -> &[WitnessTree] {
        &self.children
    }

    pub fn size(&self) -> usize {
        1 + self.children.iter().map(|c| c.size()).sum::<usize>()
    }

    pub fn labels(&self) -> Vec<usize> {
        let mut out = vec![self.label];
        for c in &self.children {
            out.extend(c.labels());
        }
        out
    }

    /// Labels grouped by depth, root first.
    pub fn levels(&self) -> Vec<Vec<usize>> {
        let mut levels = Vec::new();
        let mut frontier = vec![self];
        while !frontier.is_empty() {
            levels.push(frontier.iter().map(|t| t.label).collect());
            frontier = frontier.iter().flat_map(|t| t.children.iter()).collect();
        }
        levels
    }

    /// `(label child child ...)` with children in canonical order.
    pub fn encode(&self) -> String {
        let mut out = String::new();
        self.encode_into(&mut out);
        out
    }

    fn encode_into(&self, out: &mut String) {
        out.push('(');
        out.push_str(&self.label.to_string());
        for c in &self.children {
            out.push(' ');
            c.encode_into(out);
        }
        out.push(')');
    }

    pub fn parse(text: &str) -> Result<Self, WitnessError> {
        let bytes = text.trim().as_bytes();
        let (tree, end) = parse_at(bytes, 0)?;
        if end != bytes.len() {
            return Err(WitnessError::Parse(end));
        }
        Ok(tree)
    }

    /// Every child label lies in `D(parent) ∪ {parent}` and siblings carry
    /// distinct labels.
    pub fn check_children(&self, inst: &Instance) -> Result<(), WitnessError> {
        let mut seen = BTreeSet::new();
        for c in &self.children {
            if !inst.adjacent_or_equal(self.label, c.label) {
                return Err(WitnessError::InvalidChild { parent: self.label, child: c.label });
            }
            if !seen.insert(c.label) {
                return Err(WitnessError::RepeatedSibling(self.label));
            }
            c.check_children(inst)?;
        }
        Ok(())
    }

    /// Labels at equal depth are pairwise distinct and non-adjacent.
    pub fn levels_independent(&self, inst: &Instance) -> bool {
        self.levels().iter().all(|level| {
            level.iter().enumerate().all(|(a, &i)| level[a + 1..].iter().all(|&j| !inst.adjacent_or_equal(i, j)))
        })
    }
}

impl fmt::Debug for WitnessTree {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.encode())
    }
}

impl fmt::Display for WitnessTree {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.encode())
    }
}

fn parse_at(bytes: &[u8], mut pos: usize) -> Result<(WitnessTree, usize), WitnessError> {
    if bytes.get(pos) != Some(&b'(') {
        return Err(WitnessError::Parse(pos));
    }
    pos += 1;
    let start = pos;
    while bytes.get(pos).is_some_and(u8::is_ascii_digit) {
        pos += 1;
    }
    let label = std::str::from_utf8(&bytes[start..pos]).ok().and_then(|s| s.parse().ok()).ok_or(WitnessError::Parse(start))?;
    let mut children = Vec::new();
    loop {
        match bytes.get(pos) {
            Some(b')') => return Ok((WitnessTree::new(label, children), pos + 1)),
            Some(b' ') => {
                let (child, next) = parse_at(bytes, pos + 1)?;
                children.push(child);
                pos = next;
            }
            _ => return Err(WitnessError::Parse(pos)),
        }
    }
}

/// The witness tree of the `i`-th resampling (1-based) of the witness
/// sequence `w`: going backwards from `w_{i-1}`, each earlier constraint
/// that is equal or adjacent to some vertex label is attached below the
/// deepest such vertex, ties going to the vertex created first.
pub fn witness_tree(inst: &Instance, w: &[usize], i: usize) -> Option<WitnessTree> {
    if i == 0 || i > w.len() {
        return None;
    }
    let mut labels = vec![w[i - 1]];
    let mut depth = vec![0usize];
    let mut parent = vec![usize::MAX];
    for j in (0..i - 1).rev() {
        let mut best: Option<usize> = None;
        for v in 0..labels.len() {
            if inst.adjacent_or_equal(labels[v], w[j]) && best.is_none_or(|b| depth[v] > depth[b]) {
                best = Some(v);
            }
        }
        if let Some(b) = best {
            labels.push(w[j]);
            depth.push(depth[b] + 1);
            parent.push(b);
        }
    }
    let mut kids: Vec<Vec<usize>> = vec![Vec::new(); labels.len()];
    for v in 1..labels.len() {
        kids[parent[v]].push(v);
    }
    fn build(v: usize, labels: &[usize], kids: &[Vec<usize>]) -> WitnessTree {
        WitnessTree::new(labels[v], kids[v].iter().map(|&c| build(c, labels, kids)).collect())
    }
    Some(build(0, &labels, &kids))
}

/// Whether `τ_W(k) = tree` for some `k`.
pub fn occurs(inst: &Instance, w: &[usize], tree: &WitnessTree) -> bool {
    (1..=w.len()).any(|k| w[k - 1] == tree.label && witness_tree(inst, w, k).as_ref() == Some(tree))
}

/// `Π_{v ∈ V(τ)} μ(A_{ℓ(v)})`.
pub fn tree_probability_bound(tree: &WitnessTree, inst: &Instance, measure: &ProductMeasure) -> Result<f64, WitnessError> {
    let probs = inst.event_probabilities(measure)?;
    Ok(tree_probability_bound_with(tree, &probs))
}

pub fn tree_probability_bound_with(tree: &WitnessTree, probs: &[f64]) -> f64 {
    tree.labels().iter().map(|&l| probs[l]).product()
}

/// A branching-process sample; `truncated` is set when the size cap cut off
/// at least one generated child.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GwSample {
    pub tree: WitnessTree,
    pub truncated: bool,
}

/// Samples the branching process rooted at `j`: every vertex labeled `ℓ`
/// independently gets a child labeled `g` for each `g ∈ D(ℓ) ∪ {ℓ}` with
/// probability `ψ_g / (1 + ψ_g)`. Vertices are expanded breadth first and
/// generation stops once `size_cap` vertices exist.
pub fn gw_sample<R: Rng + ?Sized>(inst: &Instance, psi: &Psi, j: usize, rng: &mut R, size_cap: usize) -> Result<GwSample, WitnessError> {
    let size_cap = size_cap.max(1);
    let mut labels = vec![j];
    let mut kids: Vec<Vec<usize>> = vec![Vec::new()];
    let mut truncated = false;
    let mut next = 0;
    let mut candidates_cache: HashMap<usize, Vec<usize>> = HashMap::new();
    'grow: while next < labels.len() {
        let l = labels[next];
        let candidates = match candidates_cache.get(&l) {
            Some(c) => c.clone(),
            None => {
                let c = closed_neighborhood(inst, l)?;
                candidates_cache.insert(l, c.clone());
                c
            }
        };
        for g in candidates {
            let p = psi.get(g) / (1.0 + psi.get(g));
            if rng.gen_bool(p) {
                if labels.len() >= size_cap {
                    truncated = true;
                    break 'grow;
                }
                labels.push(g);
                kids.push(Vec::new());
                kids[next].push(labels.len() - 1);
            }
        }
        next += 1;
    }
    fn build(v: usize, labels: &[usize], kids: &[Vec<usize>]) -> WitnessTree {
        WitnessTree::new(labels[v], kids[v].iter().map(|&c| build(c, labels, kids)).collect())
    }
    Ok(GwSample { tree: build(0, &labels, &kids), truncated })
}

/// `D(i) ∪ {i}`, ascending.
fn closed_neighborhood(inst: &Instance, i: usize) -> Result<Vec<usize>, CspError> {
    let mut out = inst.dependency_neighbors(i)?;
    let pos = out.partition_point(|&j| j < i);
    out.insert(pos, i);
    Ok(out)
}

/// `p_τ = ψ_j^{-1} Π_v ψ_{ℓ(v)} / Π_{g ∈ D(ℓ(v)) ∪ {ℓ(v)}} (1 + ψ_g)`.
pub fn gw_probability(tree: &WitnessTree, inst: &Instance, psi: &Psi) -> Result<f64, WitnessError> {
    tree.check_children(inst)?;
    fn walk(t: &WitnessTree, inst: &Instance, psi: &Psi) -> Result<f64, WitnessError> {
        let denom: f64 = closed_neighborhood(inst, t.label)?.iter().map(|&g| 1.0 + psi.get(g)).product();
        let mut p = psi.get(t.label) / denom;
        for c in &t.children {
            p *= walk(c, inst, psi)?;
        }
        Ok(p)
    }
    Ok(walk(tree, inst, psi)? / psi.get(tree.label))
}

/// `ψ_j (1-ε)^s`.
pub fn tree_tail_bound(psi_j: f64, epsilon: f64, s: u32) -> f64 {
    psi_j * (1.0 - epsilon).powi(s as i32)
}

/// Largest number of trees [`enumerate_trees`] will produce.
pub const MAX_ENUMERATED_TREES: usize = 100_000;

/// Every tree rooted at `j` with at most `max_size` vertices in which each
/// child label lies in `D(parent) ∪ {parent}` and siblings carry distinct
/// labels: the support of the branching process, which contains every
/// witness tree rooted at `j`. Ordered by size, then encoding.
pub fn enumerate_trees(inst: &Instance, j: usize, max_size: usize) -> Result<Vec<WitnessTree>, WitnessError> {
    let mut e = Enumerator { inst, memo: HashMap::new(), produced: 0 };
    let mut out = Vec::new();
    for size in 1..=max_size {
        let mut level: Vec<WitnessTree> = e.trees(j, size)?.iter().map(|t| (**t).clone()).collect();
        level.sort_by_cached_key(|t| t.encode());
        out.extend(level);
    }
    Ok(out)
}

struct Enumerator<'a> {
    inst: &'a Instance,
    memo: HashMap<(usize, usize), Rc<Vec<Rc<WitnessTree>>>>,
    produced: usize,
}

impl Enumerator<'_> {
    /// Trees of exactly `size` vertices rooted at `label`.
    fn trees(&mut self, label: usize, size: usize) -> Result<Rc<Vec<Rc<WitnessTree>>>, WitnessError> {
        if let Some(found) = self.memo.get(&(label, size)) {
            return Ok(found.clone());
        }
        let candidates = closed_neighborhood(self.inst, label)?;
        let mut forests = Vec::new();
        self.forests(&candidates, 0, size - 1, &mut Vec::new(), &mut forests)?;
        let trees: Vec<Rc<WitnessTree>> = forests.into_iter().map(|kids| Rc::new(WitnessTree::new(label, kids))).collect();
        self.produced += trees.len();
        if self.produced > MAX_ENUMERATED_TREES {
            return Err(WitnessError::TooMany(MAX_ENUMERATED_TREES));
        }
        let trees = Rc::new(trees);
        self.memo.insert((label, size), trees.clone());
        Ok(trees)
    }

    /// Child lists using labels from `candidates[idx..]`, at most one child
    /// per label, with `remaining` vertices in total.
    fn forests(
        &mut self,
        candidates: &[usize],
        idx: usize,
        remaining: usize,
        current: &mut Vec<WitnessTree>,
        out: &mut Vec<Vec<WitnessTree>>,
    ) -> Result<(), WitnessError> {
        if remaining == 0 {
            out.push(current.clone());
            if out.len() > MAX_ENUMERATED_TREES {
                return Err(WitnessError::TooMany(MAX_ENUMERATED_TREES));
            }
            return Ok(());
        }
        if idx == candidates.len() {
            return Ok(());
        }
        self.forests(candidates, idx + 1, remaining, current, out)?;
        for sub in 1..=remaining {
            let subtrees = self.trees(candidates[idx], sub)?;
            for t in subtrees.iter() {
                current.push((**t).clone());
                self.forests(candidates, idx + 1, remaining - sub, current, out)?;
                current.pop();
            }
        }
        Ok(())
    }
}

/// Tally of witness-tree occurrences over many runs.
///
/// For each run, [`OccurrenceCounter::add_run`] builds `τ_W(k)` for every
/// `k`, records which trees of interest occurred, and counts the occurring
/// trees per root label and minimum size.
#[derive(Clone, Debug)]
pub struct OccurrenceCounter {
    index: HashMap<WitnessTree, usize>,
    hits: Vec<usize>,
    /// `(label, s)` to the sum and sum of squares over runs of the number of
    /// occurring trees rooted at `label` with at least `s` vertices.
    tails: HashMap<(usize, usize), (f64, f64)>,
    runs: usize,
    max_tracked_size: usize,
}

impl OccurrenceCounter {
    pub fn new(trees: &[WitnessTree], max_tracked_size: usize) -> Self {
        let index = trees.iter().cloned().enumerate().map(|(i, t)| (t, i)).collect();
        OccurrenceCounter { index, hits: vec![0; trees.len()], tails: HashMap::new(), runs: 0, max_tracked_size }
    }

    pub fn add_run(&mut self, inst: &Instance, w: &[usize]) {
        self.runs += 1;
        let mut seen = vec![false; self.hits.len()];
        let mut counts: HashMap<(usize, usize), usize> = HashMap::new();
        for k in 1..=w.len() {
            let t = witness_tree(inst, w, k).expect("k in range");
            for s in 1..=t.size().min(self.max_tracked_size) {
                *counts.entry((t.label, s)).or_default() += 1;
            }
            if let Some(&i) = self.index.get(&t) {
                seen[i] = true;
            }
        }
        for (i, s) in seen.into_iter().enumerate() {
            if s {
                self.hits[i] += 1;
            }
        }
        for (key, c) in counts {
            let e = self.tails.entry(key).or_default();
            e.0 += c as f64;
            e.1 += (c * c) as f64;
        }
    }

    pub fn runs(&self) -> usize {
        self.runs
    }

    /// Occurrence frequency of the `i`-th tree of interest.
    pub fn frequency(&self, i: usize) -> crate::stats::Estimate {
        crate::stats::Estimate::bernoulli(self.hits[i], self.runs)
    }

    /// Mean per-run number of occurring trees rooted at `label` with at least
    /// `min_size` vertices, which estimates `Σ_{τ ∈ 𝒲_{label, min_size}} Pr[τ]`.
    pub fn mass_at_least(&self, label: usize, min_size: usize) -> crate::stats::Estimate {
        assert!(min_size >= 1 && min_size <= self.max_tracked_size, "untracked size {min_size}");
        let (sum, sq) = self.tails.get(&(label, min_size)).copied().unwrap_or((0.0, 0.0));
        let n = self.runs.max(1) as f64;
        let mean = sum / n;
        let var = (sq / n - mean * mean).max(0.0) * n / (n - 1.0).max(1.0);
        crate::stats::Estimate { mean, std_err: (var / n).sqrt(), n: self.runs }
    }
}
