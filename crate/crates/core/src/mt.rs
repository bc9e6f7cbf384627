//! Resampling (Moser–Tardos) with a stack of violated constraints.
//!
//! Only actual resamplings count as steps. Stale stack entries, constraints
//! that were pushed and later fixed by another resampling, are skipped when
//! popped. The scan that seeds the stack is not charged to the budget.

use std::fmt::Write as _;
use std::str::FromStr;

use rand::Rng;
use thiserror::Error;

use crate::csp::{Assignment, CspError, Instance, ProductMeasure, SubProblem, Value};
use crate::lll::{LllError, Params};

/// How much of each step to record.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum LogLevel {
    /// Constraint index plus scope values before and after.
    #[default]
    Full,
    /// Constraint index only; enough for witness analysis.
    WitnessOnly,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct MtOptions {
    pub max_steps: u64,
    pub log: LogLevel,
}

impl MtOptions {
    pub fn new(max_steps: u64) -> Self {
        MtOptions { max_steps, log: LogLevel::Full }
    }

    pub fn witness_only(max_steps: u64) -> Self {
        MtOptions { max_steps, log: LogLevel::WitnessOnly }
    }
}

/// One resampling. `before`/`after` are empty under [`LogLevel::WitnessOnly`].
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Step {
    pub constraint: usize,
    pub before: Vec<Value>,
    pub after: Vec<Value>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Trajectory {
    pub initial: Assignment,
    pub steps: Vec<Step>,
    pub terminated: bool,
    /// The state after the last step, whether or not the run terminated.
    pub final_state: Assignment,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TrajectoryError {
    #[error(transparent)]
    Csp(#[from] CspError),
    #[error("step {step}: constraint {constraint} was not violated when resampled")]
    NotViolated { step: usize, constraint: usize },
    #[error("step {step}: logged scope values disagree with the replayed state")]
    ScopeMismatch { step: usize },
    #[error("step {0} carries no scope values")]
    MissingValues(usize),
    #[error("replayed final state differs from the logged one")]
    FinalMismatch,
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
}

impl Trajectory {
    /// `W = (w_1, w_2, ...)`.
    pub fn witness_sequence(&self) -> Vec<usize> {
        self.steps.iter().map(|s| s.constraint).collect()
    }

    pub fn num_steps(&self) -> usize {
        self.steps.len()
    }

    /// Replays the logged steps from `initial`, checking that every
    /// resampled constraint was violated and that the result is `final_state`.
    pub fn replay(&self, inst: &Instance) -> Result<Assignment, TrajectoryError> {
        let mut state = self.initial.clone();
        for (t, step) in self.steps.iter().enumerate() {
            if step.after.len() != inst.scope(step.constraint).len() {
                return Err(TrajectoryError::MissingValues(t));
            }
            if !inst.violated(step.constraint, &state)? {
                return Err(TrajectoryError::NotViolated { step: t, constraint: step.constraint });
            }
            if inst.scope_values(step.constraint, &state)? != step.before {
                return Err(TrajectoryError::ScopeMismatch { step: t });
            }
            for (&x, &v) in inst.scope(step.constraint).iter().zip(&step.after) {
                state.set(x, v);
            }
        }
        if state != self.final_state {
            return Err(TrajectoryError::FinalMismatch);
        }
        Ok(state)
    }

    /// Line-oriented log: a header, the initial state, one `step` line per
    /// resampling, the termination flag and the final state.
    pub fn to_log(&self) -> String {
        let mut out = String::from("trajectory v1\n");
        let _ = writeln!(out, "initial {}", format_assignment(&self.initial));
        for (t, s) in self.steps.iter().enumerate() {
            let _ = writeln!(out, "step {t} {} {} {}", s.constraint, format_tuple(&s.before), format_tuple(&s.after));
        }
        let _ = writeln!(out, "terminated {}", self.terminated);
        let _ = writeln!(out, "final {}", format_assignment(&self.final_state));
        out
    }

    pub fn from_log(text: &str) -> Result<Self, TrajectoryError> {
        let err = |line: usize, msg: &str| TrajectoryError::Parse { line: line + 1, msg: msg.to_string() };
        let lines: Vec<&str> = text.lines().collect();
        if lines.first().map(|l| l.trim()) != Some("trajectory v1") {
            return Err(err(0, "missing `trajectory v1` header"));
        }
        let field = |idx: usize, key: &str| -> Result<&str, TrajectoryError> {
            let line = lines.get(idx).ok_or_else(|| err(idx, "unexpected end of log"))?;
            line.strip_prefix(key).and_then(|r| r.strip_prefix(' ').or(if r.is_empty() { Some("") } else { None })).ok_or_else(|| err(idx, &format!("expected `{key}`")))
        };
        let initial = parse_assignment(field(1, "initial")?).map_err(|m| err(1, &m))?;
        let mut steps = Vec::new();
        let mut idx = 2;
        while lines.get(idx).is_some_and(|l| l.starts_with("step ")) {
            let parts: Vec<&str> = lines[idx].split_whitespace().collect();
            if parts.len() != 5 {
                return Err(err(idx, "step lines have 5 fields"));
            }
            if parts[1].parse::<usize>().ok() != Some(steps.len()) {
                return Err(err(idx, "step indices must be consecutive"));
            }
            let constraint = parts[2].parse().map_err(|_| err(idx, "bad constraint index"))?;
            let before = parse_tuple(parts[3]).map_err(|m| err(idx, &m))?;
            let after = parse_tuple(parts[4]).map_err(|m| err(idx, &m))?;
            steps.push(Step { constraint, before, after });
            idx += 1;
        }
        let terminated = match field(idx, "terminated")? {
            "true" => true,
            "false" => false,
            _ => return Err(err(idx, "terminated must be true or false")),
        };
        let final_state = parse_assignment(field(idx + 1, "final")?).map_err(|m| err(idx + 1, &m))?;
        if lines[idx + 2..].iter().any(|l| !l.trim().is_empty()) {
            return Err(err(idx + 2, "trailing content"));
        }
        Ok(Trajectory { initial, steps, terminated, final_state })
    }
}

fn format_tuple(values: &[Value]) -> String {
    if values.is_empty() {
        return "-".into();
    }
    values.iter().map(|v| v.to_string()).collect::<Vec<_>>().join(",")
}

fn parse_tuple(s: &str) -> Result<Vec<Value>, String> {
    if s == "-" {
        return Ok(Vec::new());
    }
    s.split(',').map(|v| Value::from_str(v).map_err(|_| format!("bad value `{v}`"))).collect()
}

fn format_assignment(a: &Assignment) -> String {
    let body: Vec<String> = a.values().iter().map(|v| v.map_or_else(|| "_".to_string(), |v| v.to_string())).collect();
    format!("{} {}", a.len(), body.join(" ")).trim_end().to_string()
}

fn parse_assignment(s: &str) -> Result<Assignment, String> {
    let mut parts = s.split_whitespace();
    let n: usize = parts.next().and_then(|p| p.parse().ok()).ok_or("missing assignment length")?;
    let values: Vec<Option<Value>> = parts
        .map(|p| if p == "_" { Ok(None) } else { p.parse().map(Some).map_err(|_| format!("bad value `{p}`")) })
        .collect::<Result<_, _>>()?;
    if values.len() != n {
        return Err(format!("expected {n} values, found {}", values.len()));
    }
    Ok(Assignment::from_options(values))
}

/// The constraints a run may look at.
enum WorkingSet<'s> {
    All(usize),
    Sub(&'s [usize]),
}

impl WorkingSet<'_> {
    fn len(&self) -> usize {
        match self {
            WorkingSet::All(m) => *m,
            WorkingSet::Sub(cs) => cs.len(),
        }
    }

    fn global(&self, local: usize) -> usize {
        match self {
            WorkingSet::All(_) => local,
            WorkingSet::Sub(cs) => cs[local],
        }
    }

    fn local(&self, i: usize) -> Option<usize> {
        match self {
            WorkingSet::All(_) => Some(i),
            WorkingSet::Sub(cs) => cs.binary_search(&i).ok(),
        }
    }
}

/// Violated constraints awaiting resampling, with membership flags indexed
/// by position in the working set.
#[derive(Clone, Debug, Default)]
pub struct ViolatedStack {
    stack: Vec<usize>,
    on_stack: Vec<bool>,
}

impl ViolatedStack {
    fn with_len(len: usize) -> Self {
        ViolatedStack { stack: Vec::new(), on_stack: vec![false; len] }
    }

    fn push(&mut self, local: usize, global: usize) {
        if !self.on_stack[local] {
            self.on_stack[local] = true;
            self.stack.push(global);
        }
    }

    /// Constraint indices, bottom first.
    pub fn entries(&self) -> &[usize] {
        &self.stack
    }

    pub fn is_empty(&self) -> bool {
        self.stack.is_empty()
    }
}

/// Called after the seeding scan and after every maintenance pass with the
/// current state and stack.
pub trait Observer {
    fn observe(&mut self, state: &Assignment, stack: &ViolatedStack);
}

impl Observer for () {
    fn observe(&mut self, _: &Assignment, _: &ViolatedStack) {}
}

impl<F: FnMut(&Assignment, &ViolatedStack)> Observer for F {
    fn observe(&mut self, state: &Assignment, stack: &ViolatedStack) {
        self(state, stack)
    }
}

fn run<R: Rng + ?Sized>(
    inst: &Instance,
    measure: &ProductMeasure,
    working: WorkingSet<'_>,
    mut state: Assignment,
    rng: &mut R,
    opts: MtOptions,
    observer: &mut dyn Observer,
) -> Trajectory {
    let initial = state.clone();
    let mut stack = ViolatedStack::with_len(working.len());
    for local in 0..working.len() {
        let i = working.global(local);
        if inst.violated_assigned(i, &state) {
            stack.push(local, i);
        }
    }
    observer.observe(&state, &stack);
    let mut steps = Vec::new();
    let mut recheck = Vec::new();
    let mut exhausted = false;
    while let Some(i) = stack.stack.pop() {
        let local = working.local(i).expect("stacked constraints belong to the working set");
        stack.on_stack[local] = false;
        if !inst.violated_assigned(i, &state) {
            continue;
        }
        if steps.len() as u64 >= opts.max_steps {
            stack.push(local, i);
            exhausted = true;
            break;
        }
        let scope = inst.scope(i);
        let before = match opts.log {
            LogLevel::Full => scope.iter().map(|&x| state.get(x).expect("scope assigned")).collect(),
            LogLevel::WitnessOnly => Vec::new(),
        };
        for &x in scope {
            state.set(x, measure.sample(x, rng));
        }
        let after = match opts.log {
            LogLevel::Full => scope.iter().map(|&x| state.get(x).expect("scope assigned")).collect(),
            LogLevel::WitnessOnly => Vec::new(),
        };
        steps.push(Step { constraint: i, before, after });
        // every constraint sharing a variable with c_i may have changed status,
        // including ones that are not dependency neighbors under lopsidependency
        recheck.clear();
        for &x in scope {
            recheck.extend(inst.incidences(x).iter().map(|inc| inc.constraint));
        }
        recheck.sort_unstable();
        recheck.dedup();
        for &j in &recheck {
            if let Some(lj) = working.local(j) {
                if inst.violated_assigned(j, &state) {
                    stack.push(lj, j);
                }
            }
        }
        observer.observe(&state, &stack);
    }
    Trajectory { initial, steps, terminated: !exhausted, final_state: state }
}

/// Samples every variable from `measure`, then resamples violated
/// constraints until none remain or `max_steps` resamplings were made.
pub fn resample_full<R: Rng + ?Sized>(inst: &Instance, measure: &ProductMeasure, rng: &mut R, max_steps: u64) -> Trajectory {
    resample_full_with(inst, measure, rng, MtOptions::new(max_steps))
}

pub fn resample_full_with<R: Rng + ?Sized>(inst: &Instance, measure: &ProductMeasure, rng: &mut R, opts: MtOptions) -> Trajectory {
    let state = Assignment::sample(measure, rng);
    run(inst, measure, WorkingSet::All(inst.num_constraints()), state, rng, opts, &mut ())
}

/// Runs on the whole instance from a given full state, without initial sampling.
pub fn run_from<R: Rng + ?Sized>(
    inst: &Instance,
    measure: &ProductMeasure,
    state: Assignment,
    rng: &mut R,
    opts: MtOptions,
) -> Result<Trajectory, CspError> {
    run_from_observed(inst, measure, state, rng, opts, &mut ())
}

pub fn run_from_observed<R: Rng + ?Sized>(
    inst: &Instance,
    measure: &ProductMeasure,
    state: Assignment,
    rng: &mut R,
    opts: MtOptions,
    observer: &mut dyn Observer,
) -> Result<Trajectory, CspError> {
    if state.len() != inst.num_vars() {
        return Err(CspError::VarOutOfRange(state.len()));
    }
    if let Some(x) = (0..inst.num_vars()).find(|&x| state.get(x).is_none()) {
        return Err(CspError::Unassigned(x));
    }
    Ok(run(inst, measure, WorkingSet::All(inst.num_constraints()), state, rng, opts, observer))
}

/// Depth-first resampling restricted to `sub`, starting from `state` with no
/// initial sampling. Constraints outside `sub` are never examined.
pub fn depth_first_mt<R: Rng + ?Sized>(
    sub: &SubProblem<'_>,
    state: Assignment,
    measure: &ProductMeasure,
    rng: &mut R,
    max_steps: u64,
) -> Result<Trajectory, CspError> {
    depth_first_mt_with(sub, state, measure, rng, MtOptions::new(max_steps), &mut ())
}

pub fn depth_first_mt_with<R: Rng + ?Sized>(
    sub: &SubProblem<'_>,
    state: Assignment,
    measure: &ProductMeasure,
    rng: &mut R,
    opts: MtOptions,
    observer: &mut dyn Observer,
) -> Result<Trajectory, CspError> {
    if let Some(&x) = sub.variables().iter().find(|&&x| state.get(x).is_none()) {
        return Err(CspError::Unassigned(x));
    }
    Ok(run(sub.parent(), measure, WorkingSet::Sub(sub.constraints()), state, rng, opts, observer))
}

/// `⌈(n + mξ)/ln(1/(1-ε))⌉ + s`: beyond this many steps a run from an
/// arbitrary state survives with probability at most `(1-ε)^s`.
pub fn global_budget(n: usize, m: usize, xi: f64, epsilon: f64, s: u64) -> Result<u64, LllError> {
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return Err(LllError::EpsilonOutOfRange(epsilon));
    }
    let base = ((n as f64 + m as f64 * xi) / -(-epsilon).ln_1p()).ceil();
    Ok(saturating_u64(base).saturating_add(s))
}

/// `T₀ = (kd)^r ξ / ln(1/(1-ε))`.
pub fn ball_t0(params: &Params, r: u32) -> f64 {
    params.kd().powf(r as f64) * params.xi / params.log_inv_one_minus_eps()
}

/// `C·(T₀ + s)` resamplings for a ball of radius `r`.
pub fn ball_budget(params: &Params, r: u32, s: f64) -> Result<u64, LllError> {
    if !(params.epsilon > 0.0 && params.epsilon < 1.0) {
        return Err(LllError::EpsilonOutOfRange(params.epsilon));
    }
    Ok(saturating_u64((params.polylog_c * (ball_t0(params, r) + s)).ceil()))
}

fn saturating_u64(x: f64) -> u64 {
    if x.is_nan() || x <= 0.0 {
        0
    } else if x >= u64::MAX as f64 {
        u64::MAX
    } else {
        x as u64
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::csp::Constraint;
    use crate::lll::{derive_params, Psi};
    use crate::rng::substream;
    use proptest::prelude::*;

    fn single_clause() -> Instance {
        Instance::new(vec![2, 2], vec![Constraint::clause(&[(0, true), (1, true)])]).unwrap()
    }

    /// Clauses `c_i = x_i ∨ x_{i+1}`.
    fn chain(m: usize) -> Instance {
        Instance::new(vec![2; m + 1], (0..m).map(|i| Constraint::clause(&[(i, true), (i + 1, true)])).collect()).unwrap()
    }

    #[test]
    fn point_mass_on_a_good_state_needs_no_resamples() {
        let inst = single_clause();
        let mu = ProductMeasure::bernoulli(&[1.0, 1.0]).unwrap();
        let t = resample_full(&inst, &mu, &mut substream(1, &[]), 100);
        assert!(t.terminated);
        assert_eq!(t.num_steps(), 0);
    }

    #[test]
    fn single_clause_needs_four_thirds_resamples_on_average() {
        // from (F,F) each uniform resample fixes the clause w.p. 3/4
        let inst = single_clause();
        let mu = ProductMeasure::uniform(inst.domains());
        let runs = 10_000;
        let total: usize = (0..runs)
            .map(|seed| {
                let t = run_from(&inst, &mu, Assignment::from_values(vec![0, 0]), &mut substream(seed, &[]), MtOptions::new(1000)).unwrap();
                assert!(t.terminated);
                t.num_steps()
            })
            .sum();
        let mean = total as f64 / runs as f64;
        assert!((mean - 4.0 / 3.0).abs() < 0.1, "mean {mean}");
    }

    #[test]
    fn zero_budget_on_a_violated_state() {
        let inst = single_clause();
        let mu = ProductMeasure::uniform(inst.domains());
        let t = run_from(&inst, &mu, Assignment::from_values(vec![0, 0]), &mut substream(0, &[]), MtOptions::new(0)).unwrap();
        assert!(!t.terminated);
        assert_eq!(t.num_steps(), 0);
        assert_eq!(t.final_state, t.initial);
    }

    #[test]
    fn sub_runs_start_from_the_given_state() {
        let inst = chain(4);
        let mu = ProductMeasure::uniform(inst.domains());
        let sub = SubProblem::from_constraints(&inst, vec![0, 1, 2, 3]);
        let good = Assignment::from_values(vec![1; 5]);
        let t = depth_first_mt(&sub, good.clone(), &mu, &mut substream(0, &[]), 10).unwrap();
        assert!(t.terminated && t.steps.is_empty() && t.final_state == good);

        // only the center clause c_2 = x2 ∨ x3 is violated
        let center = Assignment::from_values(vec![1, 1, 0, 0, 1]);
        let t = depth_first_mt(&sub, center.clone(), &mu, &mut substream(3, &[]), 10).unwrap();
        assert_eq!(t.steps[0].constraint, 2);
        let again = depth_first_mt(&sub, center, &mu, &mut substream(3, &[]), 10).unwrap();
        assert_eq!(t, again);
    }

    #[test]
    fn sub_runs_ignore_outside_constraints() {
        let inst = chain(4);
        let mu = ProductMeasure::uniform(inst.domains());
        let sub = SubProblem::from_constraints(&inst, vec![0]);
        // c_3 = x3 ∨ x4 is violated but outside the working set
        let state = Assignment::from_values(vec![1, 1, 1, 0, 0]);
        let t = depth_first_mt(&sub, state.clone(), &mu, &mut substream(0, &[]), 10).unwrap();
        assert!(t.terminated && t.steps.is_empty());
        let mut partial = state;
        partial.clear(1);
        assert_eq!(depth_first_mt(&sub, partial, &mu, &mut substream(0, &[]), 10), Err(CspError::Unassigned(1)));
    }

    #[test]
    fn witness_only_logging_keeps_the_sequence() {
        let inst = chain(6);
        let mu = ProductMeasure::uniform(inst.domains());
        let full = resample_full(&inst, &mu, &mut substream(9, &[]), 1000);
        let lean = resample_full_with(&inst, &mu, &mut substream(9, &[]), MtOptions::witness_only(1000));
        assert_eq!(full.witness_sequence(), lean.witness_sequence());
        assert_eq!(full.final_state, lean.final_state);
        assert!(lean.steps.iter().all(|s| s.before.is_empty()));
    }

    #[test]
    fn budgets() {
        assert_eq!(global_budget(10, 5, 2f64.ln(), 0.5, 10).unwrap(), 30);
        assert_eq!(global_budget(10, 5, 2f64.ln(), 0.5, 0).unwrap(), 20);
        assert_eq!(global_budget(10, 5, 2f64.ln(), 0.5, 20).unwrap(), 40);
        assert!(global_budget(10, 5, 2f64.ln(), 0.0, 1).is_err());

        let inst = chain(3); // k = 2, d = 2
        let p = derive_params(&inst, &Psi::constant(3, 1.0).unwrap(), 0.5).unwrap();
        assert!((ball_t0(&p, 2) - 16.0).abs() < 1e-12);
        assert!((ball_t0(&p, 0) - 1.0).abs() < 1e-12);
        assert_eq!(ball_budget(&p, 2, 0.0).unwrap(), 16 * 16);
        let budgets: Vec<u64> = (0..6).map(|r| ball_budget(&p, r, 3.0).unwrap()).collect();
        assert!(budgets.windows(2).all(|w| w[0] < w[1]));
        assert_eq!(ball_budget(&p, 200, 0.0).unwrap(), u64::MAX);
    }

    #[test]
    fn log_round_trip_and_parse_errors() {
        let inst = chain(5);
        let mu = ProductMeasure::uniform(inst.domains());
        let t = resample_full(&inst, &mu, &mut substream(4, &[]), 3);
        let text = t.to_log();
        assert_eq!(Trajectory::from_log(&text).unwrap(), t);
        assert!(Trajectory::from_log("nope\n").is_err());
        assert!(Trajectory::from_log(&text.replace("terminated", "finished")).is_err());
    }

    #[test]
    fn replay_rejects_tampered_logs() {
        let inst = chain(5);
        let mu = ProductMeasure::uniform(inst.domains());
        let mut t = run_from(&inst, &mu, Assignment::from_values(vec![0; 6]), &mut substream(2, &[]), MtOptions::new(100)).unwrap();
        assert_eq!(t.replay(&inst).unwrap(), t.final_state);
        t.steps[0].before = vec![1, 1];
        assert!(matches!(t.replay(&inst), Err(TrajectoryError::ScopeMismatch { step: 0 }) | Err(TrajectoryError::NotViolated { .. })));
    }

    proptest! {
        #[test]
        fn soundness_locality_and_replay(inst in crate::csp::tests::arb_instance(), seed in any::<u64>()) {
            let mu = ProductMeasure::uniform(inst.domains());
            let t = resample_full(&inst, &mu, &mut substream(seed, &[]), 200);
            if t.terminated {
                prop_assert!(inst.is_flawless(&t.final_state).unwrap());
            }
            prop_assert_eq!(t.replay(&inst).unwrap(), t.final_state.clone());
            // each step changes only the resampled scope
            let mut state = t.initial.clone();
            for s in &t.steps {
                let mut next = state.clone();
                for (&x, &v) in inst.scope(s.constraint).iter().zip(&s.after) {
                    next.set(x, v);
                }
                for x in 0..inst.num_vars() {
                    if !inst.scope(s.constraint).contains(&x) {
                        prop_assert_eq!(state.get(x), next.get(x));
                    }
                }
                state = next;
            }
        }

        #[test]
        fn stack_holds_exactly_the_violated_constraints(inst in crate::csp::tests::arb_instance(), seed in any::<u64>(), frac in 0.2f64..1.0) {
            let mu = ProductMeasure::uniform(inst.domains());
            let mut rng = substream(seed, &[]);
            let take = ((inst.num_constraints() as f64 * frac).ceil() as usize).max(1);
            let sub = SubProblem::from_constraints(&inst, (0..take.min(inst.num_constraints())).collect());
            let state = Assignment::sample(&mu, &mut rng);
            let mut failures = 0usize;
            let mut check = |state: &Assignment, stack: &ViolatedStack| {
                let live: std::collections::BTreeSet<usize> =
                    stack.entries().iter().copied().filter(|&i| inst.violated(i, state).unwrap()).collect();
                let oracle: std::collections::BTreeSet<usize> =
                    sub.constraints().iter().copied().filter(|&i| inst.violated(i, state).unwrap()).collect();
                let mut sorted = stack.entries().to_vec();
                sorted.sort_unstable();
                sorted.dedup();
                if live != oracle || sorted.len() != stack.entries().len() {
                    failures += 1;
                }
            };
            let t = depth_first_mt_with(&sub, state, &mu, &mut rng, MtOptions::new(100), &mut check).unwrap();
            prop_assert_eq!(failures, 0);
            if t.terminated {
                for &i in sub.constraints() {
                    prop_assert!(!inst.violated(i, &t.final_state).unwrap());
                }
            }
        }
    }
}
