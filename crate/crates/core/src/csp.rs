//! Constraint satisfaction instances in the variable setting.
//!
//! An [`Instance`] is a set of variables with finite domains `0..|D|` and a
//! list of constraints, each over an ordered scope of variables. A constraint
//! is violated when the restriction of the state to its scope is one of its
//! forbidden tuples. Together with a [`ProductMeasure`] every constraint
//! induces a bad event whose probability can be computed exactly (except for
//! predicate-backed constraints, which are "mass-free").
//!
//! The dependency graph on constraints is never materialized. Neighbors are
//! computed on demand from the variable/constraint incidence lists.

use std::collections::BTreeSet;
use std::fmt;
use std::sync::Arc;

use rand::Rng;
use thiserror::Error;

/// A value of a variable, an index into its domain.
pub type Value = u32;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CspError {
    #[error("constraint {0} has an empty scope")]
    EmptyScope(usize),
    #[error("constraint {constraint} references variable {var}, but there are only {n} variables")]
    VariableOutOfRange { constraint: usize, var: usize, n: usize },
    #[error("constraint {constraint} mentions variable {var} twice")]
    DuplicateVariable { constraint: usize, var: usize },
    #[error("variable {0} has an empty domain")]
    EmptyDomain(usize),
    #[error("constraint {constraint}: value {value} is outside the domain of variable {var}")]
    ValueOutOfDomain { constraint: usize, var: usize, value: Value },
    #[error("constraint {constraint}: forbidden tuple has arity {got}, scope has {expected}")]
    TupleArity { constraint: usize, expected: usize, got: usize },
    #[error("constraint index {0} out of range")]
    ConstraintOutOfRange(usize),
    #[error("variable index {0} out of range")]
    VarOutOfRange(usize),
    #[error("variable {0} is unassigned")]
    Unassigned(usize),
    #[error("constraint {0} is predicate-backed and has no exact mass")]
    MassFree(usize),
    #[error("measure for variable {var}: {reason}")]
    BadMeasure { var: usize, reason: String },
}

/// Decides whether a tuple of scope values violates a constraint.
///
/// Used for constraints whose forbidden set is too large to list.
pub trait ScopePredicate: Send + Sync + fmt::Debug {
    fn violated(&self, values: &[Value]) -> bool;
}

#[derive(Clone, Debug)]
pub enum ConstraintKind {
    /// A disjunction of literals over boolean variables. Entry `p` is the
    /// value of `scope[p]` that falsifies its literal, so the clause has
    /// exactly one forbidden tuple.
    Clause(Vec<Value>),
    /// An explicit set of forbidden tuples, in scope order.
    Forbidden(BTreeSet<Vec<Value>>),
    /// A violation predicate without an exact mass.
    Predicate(Arc<dyn ScopePredicate>),
}

#[derive(Clone, Debug)]
pub struct Constraint {
    scope: Vec<usize>,
    kind: ConstraintKind,
}

impl Constraint {
    /// A clause from `(variable, is_positive)` literals.
    pub fn clause(literals: &[(usize, bool)]) -> Self {
        Constraint {
            scope: literals.iter().map(|&(v, _)| v).collect(),
            kind: ConstraintKind::Clause(literals.iter().map(|&(_, pos)| Value::from(!pos)).collect()),
        }
    }

    pub fn forbidden<I>(scope: Vec<usize>, tuples: I) -> Self
    where
        I: IntoIterator<Item = Vec<Value>>,
    {
        Constraint { scope, kind: ConstraintKind::Forbidden(tuples.into_iter().collect()) }
    }

    pub fn predicate(scope: Vec<usize>, predicate: Arc<dyn ScopePredicate>) -> Self {
        Constraint { scope, kind: ConstraintKind::Predicate(predicate) }
    }

    pub fn scope(&self) -> &[usize] {
        &self.scope
    }

    pub fn kind(&self) -> &ConstraintKind {
        &self.kind
    }

    pub fn is_mass_free(&self) -> bool {
        matches!(self.kind, ConstraintKind::Predicate(_))
    }

    /// Violation test on values listed in scope order.
    pub fn violated_by(&self, values: &[Value]) -> bool {
        match &self.kind {
            ConstraintKind::Clause(falsifying) => falsifying == values,
            ConstraintKind::Forbidden(set) => set.contains(values),
            ConstraintKind::Predicate(p) => p.violated(values),
        }
    }

    /// The forbidden tuples, materialized. `None` for predicates.
    pub fn forbidden_tuples(&self) -> Option<Vec<Vec<Value>>> {
        match &self.kind {
            ConstraintKind::Clause(f) => Some(vec![f.clone()]),
            ConstraintKind::Forbidden(set) => Some(set.iter().cloned().collect()),
            ConstraintKind::Predicate(_) => None,
        }
    }

    /// Values that forbidden tuples take at scope position `pos`.
    fn forbidden_values_at(&self, pos: usize) -> Option<BTreeSet<Value>> {
        match &self.kind {
            ConstraintKind::Clause(f) => Some(std::iter::once(f[pos]).collect()),
            ConstraintKind::Forbidden(set) => Some(set.iter().map(|t| t[pos]).collect()),
            ConstraintKind::Predicate(_) => None,
        }
    }
}

/// How two constraints are declared dependent.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum DependencyMode {
    /// Adjacent iff the scopes intersect.
    #[default]
    SharedVariable,
    /// Adjacent iff the scopes intersect and some forbidden tuple of one
    /// disagrees with some forbidden tuple of the other on a shared variable.
    /// For clauses: a shared variable occurs with opposite signs. Resampling
    /// a violated constraint can only newly violate constraints adjacent in
    /// this sense, so Moser-Tardos and its analysis run unchanged on it.
    /// Predicate constraints fall back to scope intersection.
    Lopsided,
}

/// One entry of the incidence lists: constraint `constraint` has the
/// variable at scope position `pos`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Incidence {
    pub constraint: usize,
    pub pos: usize,
}

/// An immutable LLL instance.
#[derive(Clone, Debug)]
pub struct Instance {
    domains: Vec<usize>,
    constraints: Vec<Constraint>,
    var_to_constraints: Vec<Vec<Incidence>>,
    k: usize,
    d: usize,
    mode: DependencyMode,
}

impl Instance {
    /// Validates the constraints and builds the incidence lists.
    ///
    /// `domains[x]` is the domain size of variable `x`.
    pub fn new(domains: Vec<usize>, constraints: Vec<Constraint>) -> Result<Self, CspError> {
        let n = domains.len();
        if let Some(x) = domains.iter().position(|&size| size == 0) {
            return Err(CspError::EmptyDomain(x));
        }
        let mut var_to_constraints = vec![Vec::new(); n];
        let mut seen = vec![usize::MAX; n];
        for (i, c) in constraints.iter().enumerate() {
            if c.scope.is_empty() {
                return Err(CspError::EmptyScope(i));
            }
            for (pos, &x) in c.scope.iter().enumerate() {
                if x >= n {
                    return Err(CspError::VariableOutOfRange { constraint: i, var: x, n });
                }
                if seen[x] == i {
                    return Err(CspError::DuplicateVariable { constraint: i, var: x });
                }
                seen[x] = i;
                var_to_constraints[x].push(Incidence { constraint: i, pos });
            }
            let check_tuple = |t: &[Value]| -> Result<(), CspError> {
                if t.len() != c.scope.len() {
                    return Err(CspError::TupleArity { constraint: i, expected: c.scope.len(), got: t.len() });
                }
                for (&x, &v) in c.scope.iter().zip(t) {
                    if v as usize >= domains[x] {
                        return Err(CspError::ValueOutOfDomain { constraint: i, var: x, value: v });
                    }
                }
                Ok(())
            };
            match &c.kind {
                ConstraintKind::Clause(f) => check_tuple(f)?,
                ConstraintKind::Forbidden(set) => set.iter().try_for_each(|t| check_tuple(t))?,
                ConstraintKind::Predicate(_) => {}
            }
        }
        let k = constraints.iter().map(|c| c.scope.len()).max().unwrap_or(0);
        let d = var_to_constraints.iter().map(Vec::len).max().unwrap_or(0);
        Ok(Instance { domains, constraints, var_to_constraints, k, d, mode: DependencyMode::SharedVariable })
    }

    pub fn with_dependency_mode(mut self, mode: DependencyMode) -> Self {
        self.mode = mode;
        self
    }

    pub fn dependency_mode(&self) -> DependencyMode {
        self.mode
    }

    pub fn num_vars(&self) -> usize {
        self.domains.len()
    }

    pub fn num_constraints(&self) -> usize {
        self.constraints.len()
    }

    /// Maximum scope size.
    pub fn k(&self) -> usize {
        self.k
    }

    /// Maximum number of constraints a variable occurs in.
    pub fn d(&self) -> usize {
        self.d
    }

    pub fn domains(&self) -> &[usize] {
        &self.domains
    }

    pub fn domain_size(&self, x: usize) -> usize {
        self.domains[x]
    }

    pub fn constraints(&self) -> &[Constraint] {
        &self.constraints
    }

    pub fn constraint(&self, i: usize) -> &Constraint {
        &self.constraints[i]
    }

    pub fn scope(&self, i: usize) -> &[usize] {
        &self.constraints[i].scope
    }

    /// `N(x)` with scope positions.
    pub fn incidences(&self, x: usize) -> &[Incidence] {
        &self.var_to_constraints[x]
    }

    /// Constraint indices containing `x`, ascending.
    pub fn constraints_of(&self, x: usize) -> impl Iterator<Item = usize> + '_ {
        self.var_to_constraints[x].iter().map(|inc| inc.constraint)
    }

    pub fn has_mass_free_constraints(&self) -> bool {
        self.constraints.iter().any(Constraint::is_mass_free)
    }

    /// Whether constraints `i` (having the shared variable at position
    /// `pos_i`) and `j` (at `pos_j`) conflict on that variable.
    #[inline]
    fn conflict_at(&self, i: usize, pos_i: usize, j: usize, pos_j: usize) -> bool {
        match self.mode {
            DependencyMode::SharedVariable => true,
            DependencyMode::Lopsided => {
                let (ci, cj) = (&self.constraints[i], &self.constraints[j]);
                match (&ci.kind, &cj.kind) {
                    (ConstraintKind::Clause(a), ConstraintKind::Clause(b)) => a[pos_i] != b[pos_j],
                    _ => match (ci.forbidden_values_at(pos_i), cj.forbidden_values_at(pos_j)) {
                        (Some(a), Some(b)) => {
                            if a.is_empty() || b.is_empty() {
                                false
                            } else {
                                !(a.len() == 1 && a == b)
                            }
                        }
                        _ => true,
                    },
                }
            }
        }
    }

    /// Calls `f` for every dependency neighbor of `i`, possibly repeatedly
    /// and never with `i` itself.
    pub(crate) fn for_each_neighbor(&self, i: usize, mut f: impl FnMut(usize)) {
        for (pos_i, &x) in self.constraints[i].scope.iter().enumerate() {
            for inc in &self.var_to_constraints[x] {
                if inc.constraint != i && self.conflict_at(i, pos_i, inc.constraint, inc.pos) {
                    f(inc.constraint);
                }
            }
        }
    }

    /// `D(i)`: ascending, without `i`.
    pub fn dependency_neighbors(&self, i: usize) -> Result<Vec<usize>, CspError> {
        if i >= self.num_constraints() {
            return Err(CspError::ConstraintOutOfRange(i));
        }
        let mut out = Vec::new();
        self.for_each_neighbor(i, |j| out.push(j));
        out.sort_unstable();
        out.dedup();
        Ok(out)
    }

    /// Whether `i == j` or `j ∈ D(i)`.
    pub fn adjacent_or_equal(&self, i: usize, j: usize) -> bool {
        if i == j {
            return true;
        }
        let mut found = false;
        for (pos_i, &x) in self.constraints[i].scope.iter().enumerate() {
            if let Some(inc) = self.var_to_constraints[x].iter().find(|inc| inc.constraint == j) {
                if self.conflict_at(i, pos_i, j, inc.pos) {
                    found = true;
                    break;
                }
            }
        }
        found
    }

    /// `Ball(i, r)`, ascending.
    pub fn ball(&self, i: usize, r: usize) -> Result<Vec<usize>, CspError> {
        if i >= self.num_constraints() {
            return Err(CspError::ConstraintOutOfRange(i));
        }
        let mut scratch = BallScratch::new();
        Ok(self.bfs(&mut scratch, std::iter::once(i), r))
    }

    /// The sub-problem induced by the union of `Ball(c, r)` over all
    /// constraints `c` containing `x`.
    pub fn induced_subproblem(&self, x: usize, r: usize) -> Result<SubProblem<'_>, CspError> {
        let mut scratch = BallScratch::new();
        self.induced_subproblem_with(&mut scratch, x, r)
    }

    /// As [`Instance::induced_subproblem`], reusing `scratch` so that the cost
    /// is proportional to the size of the result rather than to `m`.
    pub fn induced_subproblem_with(&self, scratch: &mut BallScratch, x: usize, r: usize) -> Result<SubProblem<'_>, CspError> {
        if x >= self.num_vars() {
            return Err(CspError::VarOutOfRange(x));
        }
        let constraints = self.bfs(scratch, self.constraints_of(x), r);
        Ok(SubProblem::from_constraints(self, constraints))
    }

    fn bfs(&self, scratch: &mut BallScratch, sources: impl Iterator<Item = usize>, r: usize) -> Vec<usize> {
        scratch.reset(self.num_constraints());
        let mut out = Vec::new();
        for s in sources {
            if scratch.visit(s) {
                out.push(s);
            }
        }
        let mut frontier_start = 0;
        for _ in 0..r {
            let frontier_end = out.len();
            if frontier_start == frontier_end {
                break;
            }
            for idx in frontier_start..frontier_end {
                let c = out[idx];
                // the visited test is far cheaper than the conflict test, so it goes first
                for (pos_c, &x) in self.constraints[c].scope.iter().enumerate() {
                    for inc in &self.var_to_constraints[x] {
                        let j = inc.constraint;
                        if !scratch.is_visited(j) && self.conflict_at(c, pos_c, j, inc.pos) {
                            scratch.visit(j);
                            out.push(j);
                        }
                    }
                }
            }
            frontier_start = frontier_end;
        }
        out.sort_unstable();
        out
    }

    /// Values of `i`'s scope under `state`, or the first unassigned variable.
    pub fn scope_values(&self, i: usize, state: &Assignment) -> Result<Vec<Value>, CspError> {
        self.scope(i).iter().map(|&x| state.get(x).ok_or(CspError::Unassigned(x))).collect()
    }

    /// Whether `state` violates constraint `i`.
    pub fn violated(&self, i: usize, state: &Assignment) -> Result<bool, CspError> {
        if i >= self.num_constraints() {
            return Err(CspError::ConstraintOutOfRange(i));
        }
        match &self.constraints[i].kind {
            ConstraintKind::Clause(f) => {
                for (&x, &bad) in self.scope(i).iter().zip(f) {
                    match state.get(x) {
                        None => return Err(CspError::Unassigned(x)),
                        Some(v) if v != bad => return Ok(false),
                        Some(_) => {}
                    }
                }
                Ok(true)
            }
            _ => {
                let values = self.scope_values(i, state)?;
                Ok(self.constraints[i].violated_by(&values))
            }
        }
    }

    /// Violation test for states known to assign the whole scope.
    pub(crate) fn violated_assigned(&self, i: usize, state: &Assignment) -> bool {
        self.violated(i, state).expect("scope must be assigned")
    }

    /// Exact `μ(A_i)`.
    pub fn event_probability(&self, measure: &ProductMeasure, i: usize) -> Result<f64, CspError> {
        if i >= self.num_constraints() {
            return Err(CspError::ConstraintOutOfRange(i));
        }
        let c = &self.constraints[i];
        let tuple_mass = |t: &[Value]| -> f64 { c.scope.iter().zip(t).map(|(&x, &v)| measure.probability(x, v)).product() };
        match &c.kind {
            ConstraintKind::Clause(f) => Ok(tuple_mass(f)),
            ConstraintKind::Forbidden(set) => Ok(set.iter().map(|t| tuple_mass(t)).sum()),
            ConstraintKind::Predicate(_) => Err(CspError::MassFree(i)),
        }
    }

    /// All exact event probabilities.
    pub fn event_probabilities(&self, measure: &ProductMeasure) -> Result<Vec<f64>, CspError> {
        (0..self.num_constraints()).map(|i| self.event_probability(measure, i)).collect()
    }

    /// Monte-Carlo estimate of `μ(A_i)`, for mass-free constraints.
    pub fn estimate_event_probability<R: Rng + ?Sized>(
        &self,
        measure: &ProductMeasure,
        i: usize,
        samples: usize,
        rng: &mut R,
    ) -> crate::stats::Estimate {
        let c = &self.constraints[i];
        let mut values = vec![0; c.scope.len()];
        let mut hits = 0usize;
        for _ in 0..samples {
            for (slot, &x) in values.iter_mut().zip(&c.scope) {
                *slot = measure.sample(x, rng);
            }
            if c.violated_by(&values) {
                hits += 1;
            }
        }
        crate::stats::Estimate::bernoulli(hits, samples)
    }

    /// Indices of all constraints violated by a full `state`.
    pub fn violated_constraints(&self, state: &Assignment) -> Result<Vec<usize>, CspError> {
        let mut out = Vec::new();
        for i in 0..self.num_constraints() {
            if self.violated(i, state)? {
                out.push(i);
            }
        }
        Ok(out)
    }

    pub fn is_flawless(&self, state: &Assignment) -> Result<bool, CspError> {
        for i in 0..self.num_constraints() {
            if self.violated(i, state)? {
                return Ok(false);
            }
        }
        Ok(true)
    }
}

/// Reusable visited-marks for breadth-first searches over constraints.
///
/// Marks are epoch-stamped, so resetting is O(1) after the first use.
#[derive(Clone, Debug, Default)]
pub struct BallScratch {
    stamp: Vec<u32>,
    epoch: u32,
}

impl BallScratch {
    pub fn new() -> Self {
        Self::default()
    }

    fn reset(&mut self, m: usize) {
        if self.stamp.len() < m {
            self.stamp.resize(m, 0);
        }
        self.epoch = self.epoch.wrapping_add(1);
        if self.epoch == 0 {
            self.stamp.iter_mut().for_each(|s| *s = 0);
            self.epoch = 1;
        }
    }

    fn is_visited(&self, i: usize) -> bool {
        self.stamp[i] == self.epoch
    }

    fn visit(&mut self, i: usize) -> bool {
        if self.stamp[i] == self.epoch {
            false
        } else {
            self.stamp[i] = self.epoch;
            true
        }
    }
}

/// The sub-CSP induced by a set of constraints and the variables they contain.
#[derive(Clone, Debug)]
pub struct SubProblem<'a> {
    parent: &'a Instance,
    constraints: Vec<usize>,
    variables: Vec<usize>,
}

impl<'a> SubProblem<'a> {
    /// `constraints` must be valid indices; they are sorted and deduplicated.
    pub fn from_constraints(parent: &'a Instance, mut constraints: Vec<usize>) -> Self {
        constraints.sort_unstable();
        constraints.dedup();
        let mut variables: Vec<usize> = constraints.iter().flat_map(|&i| parent.scope(i).iter().copied()).collect();
        variables.sort_unstable();
        variables.dedup();
        SubProblem { parent, constraints, variables }
    }

    pub fn parent(&self) -> &'a Instance {
        self.parent
    }

    pub fn constraints(&self) -> &[usize] {
        &self.constraints
    }

    pub fn variables(&self) -> &[usize] {
        &self.variables
    }

    pub fn is_empty(&self) -> bool {
        self.constraints.is_empty()
    }

    /// Position of constraint `i` in [`SubProblem::constraints`].
    pub fn local_index(&self, i: usize) -> Option<usize> {
        self.constraints.binary_search(&i).ok()
    }
}

/// A product distribution over the variables.
#[derive(Clone, Debug, PartialEq)]
pub struct ProductMeasure {
    probs: Vec<Vec<f64>>,
    cumulative: Vec<Vec<f64>>,
}

impl ProductMeasure {
    pub const TOLERANCE: f64 = 1e-12;

    pub fn new(probs: Vec<Vec<f64>>) -> Result<Self, CspError> {
        for (x, p) in probs.iter().enumerate() {
            if p.is_empty() {
                return Err(CspError::BadMeasure { var: x, reason: "empty distribution".into() });
            }
            if p.iter().any(|&v| !(v >= 0.0) || !v.is_finite()) {
                return Err(CspError::BadMeasure { var: x, reason: "negative or non-finite probability".into() });
            }
            let total: f64 = p.iter().sum();
            if (total - 1.0).abs() > Self::TOLERANCE {
                return Err(CspError::BadMeasure { var: x, reason: format!("probabilities sum to {total}") });
            }
        }
        let cumulative = probs
            .iter()
            .map(|p| {
                p.iter()
                    .scan(0.0, |acc, &v| {
                        *acc += v;
                        Some(*acc)
                    })
                    .collect()
            })
            .collect();
        Ok(ProductMeasure { probs, cumulative })
    }

    /// Uniform over each domain.
    pub fn uniform(domains: &[usize]) -> Self {
        let probs = domains.iter().map(|&s| vec![1.0 / s as f64; s]).collect();
        Self::new(probs).expect("uniform distributions are valid")
    }

    /// Boolean variables with the given `Pr[x = 1]`.
    pub fn bernoulli(p_true: &[f64]) -> Result<Self, CspError> {
        Self::new(p_true.iter().map(|&p| vec![1.0 - p, p]).collect())
    }

    /// Checks that the measure covers exactly the instance's domains.
    pub fn check_against(&self, inst: &Instance) -> Result<(), CspError> {
        if self.probs.len() != inst.num_vars() {
            return Err(CspError::BadMeasure {
                var: self.probs.len().min(inst.num_vars()),
                reason: format!("measure has {} variables, instance has {}", self.probs.len(), inst.num_vars()),
            });
        }
        for (x, p) in self.probs.iter().enumerate() {
            if p.len() != inst.domain_size(x) {
                return Err(CspError::BadMeasure { var: x, reason: "distribution length differs from domain size".into() });
            }
        }
        Ok(())
    }

    pub fn num_vars(&self) -> usize {
        self.probs.len()
    }

    pub fn distribution(&self, x: usize) -> &[f64] {
        &self.probs[x]
    }

    pub fn probability(&self, x: usize, v: Value) -> f64 {
        self.probs[x].get(v as usize).copied().unwrap_or(0.0)
    }

    /// Draws a value for `x`.
    pub fn sample<R: Rng + ?Sized>(&self, x: usize, rng: &mut R) -> Value {
        let u: f64 = rng.gen();
        let cum = &self.cumulative[x];
        let idx = cum.partition_point(|&c| c <= u);
        if idx < cum.len() {
            idx as Value
        } else {
            // u landed in the rounding gap above the last partial sum
            self.probs[x].iter().rposition(|&p| p > 0.0).unwrap_or(0) as Value
        }
    }
}

/// A full or partial state.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Default)]
pub struct Assignment {
    values: Vec<Option<Value>>,
}

impl Assignment {
    pub fn unassigned(n: usize) -> Self {
        Assignment { values: vec![None; n] }
    }

    pub fn from_values(values: Vec<Value>) -> Self {
        Assignment { values: values.into_iter().map(Some).collect() }
    }

    pub fn from_options(values: Vec<Option<Value>>) -> Self {
        Assignment { values }
    }

    /// Samples every variable from `measure`.
    pub fn sample<R: Rng + ?Sized>(measure: &ProductMeasure, rng: &mut R) -> Self {
        Assignment { values: (0..measure.num_vars()).map(|x| Some(measure.sample(x, rng))).collect() }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn get(&self, x: usize) -> Option<Value> {
        self.values.get(x).copied().flatten()
    }

    pub fn set(&mut self, x: usize, v: Value) {
        self.values[x] = Some(v);
    }

    pub fn clear(&mut self, x: usize) {
        self.values[x] = None;
    }

    pub fn is_full(&self) -> bool {
        self.values.iter().all(Option::is_some)
    }

    pub fn values(&self) -> &[Option<Value>] {
        &self.values
    }

    /// The values of a full assignment.
    pub fn to_full(&self) -> Option<Vec<Value>> {
        self.values.iter().copied().collect()
    }

    /// Checks every set value against the instance's domains.
    pub fn check_domains(&self, inst: &Instance) -> Result<(), CspError> {
        for (x, v) in self.values.iter().enumerate() {
            if let Some(v) = *v {
                if x >= inst.num_vars() {
                    return Err(CspError::VarOutOfRange(x));
                }
                if v as usize >= inst.domain_size(x) {
                    return Err(CspError::ValueOutOfDomain { constraint: usize::MAX, var: x, value: v });
                }
            }
        }
        Ok(())
    }
}
