//! Query-by-query access to one Moser–Tardos solution.
//!
//! Each query builds the induced subproblem around the queried variable,
//! samples the variables it sees for the first time, and runs depth-first
//! resampling on that subproblem for a bounded number of steps. All queries
//! of a session share one partial state, so the session is a prefix of a
//! single complete resampling run. Answers are never retracted.

use std::fmt::Write as _;

use thiserror::Error;

use crate::csp::{Assignment, BallScratch, CspError, Instance, ProductMeasure, Value};
use crate::lll::{derive_params, radius_for, LllError, Params, Psi};
use crate::mt::{depth_first_mt_with, ball_budget, run_from, LogLevel, MtOptions, Trajectory};
use crate::rng::{substream, LllRng};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LcaError {
    #[error(transparent)]
    Lll(#[from] LllError),
    #[error(transparent)]
    Csp(#[from] CspError),
    #[error("session aborted; no further answers")]
    Aborted,
    #[error("query cap of {0} reached")]
    QueryCapExceeded(usize),
    #[error("completion did not terminate within {0} resamplings")]
    CompletionExhausted(u64),
    #[error("final assignment violates constraint {0}")]
    InvalidFinal(usize),
}

/// Parameters of a session. `None` overrides mean "derive".
#[derive(Clone, Debug, PartialEq)]
pub struct LcaConfig {
    pub q: usize,
    pub delta: f64,
    pub epsilon: f64,
    pub r_override: Option<u32>,
    pub t_override: Option<u64>,
    pub seed: u64,
    pub trial: u64,
    /// Keep every per-query trajectory with full scope values.
    pub keep_trajectories: bool,
}

impl LcaConfig {
    pub fn new(q: usize, delta: f64, epsilon: f64) -> Self {
        LcaConfig { q, delta, epsilon, r_override: None, t_override: None, seed: 0, trial: 0, keep_trajectories: false }
    }

    pub fn seed(mut self, seed: u64, trial: u64) -> Self {
        self.seed = seed;
        self.trial = trial;
        self
    }

    pub fn radius(mut self, r: u32) -> Self {
        self.r_override = Some(r);
        self
    }

    pub fn budget(mut self, t: u64) -> Self {
        self.t_override = Some(t);
        self
    }

    pub fn keep_trajectories(mut self, keep: bool) -> Self {
        self.keep_trajectories = keep;
        self
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum QueryOutcome {
    Answer(Value),
    Abort,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct QueryResult {
    pub variable: usize,
    pub outcome: QueryOutcome,
    pub resamples: u64,
    /// Number of constraints in the induced subproblem.
    pub ball_size: usize,
    /// Variables sampled for the first time by this query.
    pub fresh: usize,
    /// The variable had been answered before; the stored answer was returned.
    pub replayed: bool,
}

impl QueryResult {
    pub fn value(&self) -> Option<Value> {
        match self.outcome {
            QueryOutcome::Answer(v) => Some(v),
            QueryOutcome::Abort => None,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Answer {
    pub variable: usize,
    pub value: Value,
    pub query: usize,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Consistency {
    pub consistent: bool,
    /// Query index of the earliest answer that disagrees with the final state.
    pub first_violation: Option<usize>,
}

/// Label of the random stream used by [`LcaSession::continue_to_completion`].
const COMPLETION_STREAM: u64 = u64::MAX;

pub struct LcaSession<'a> {
    inst: &'a Instance,
    measure: &'a ProductMeasure,
    params: Params,
    r: u32,
    t: u64,
    q_max: usize,
    seed: u64,
    trial: u64,
    keep_trajectories: bool,
    in_s: Vec<bool>,
    touched: Vec<bool>,
    sigma: Assignment,
    answers: Vec<Answer>,
    answered: Vec<Option<usize>>,
    /// `E_i`: the answered variable was resampled after its answer.
    resampled_after_answer: Vec<bool>,
    results: Vec<QueryResult>,
    trajectories: Vec<Trajectory>,
    aborted: bool,
    scratch: BallScratch,
}

impl<'a> LcaSession<'a> {
    /// Derives the radius from `(q, δ, ε, η)` and the per-query budget from
    /// `ball_budget` with `s = 2 ln n / ln(1/(1-ε))`, unless overridden.
    pub fn open(inst: &'a Instance, measure: &'a ProductMeasure, psi: &Psi, config: &LcaConfig) -> Result<Self, LcaError> {
        measure.check_against(inst)?;
        let params = derive_params(inst, psi, config.epsilon)?;
        Self::open_with_params(inst, measure, params, config)
    }

    pub fn open_with_params(inst: &'a Instance, measure: &'a ProductMeasure, params: Params, config: &LcaConfig) -> Result<Self, LcaError> {
        if !(config.epsilon > 0.0 && config.epsilon < 1.0) {
            return Err(LllError::EpsilonOutOfRange(config.epsilon).into());
        }
        let n = inst.num_vars();
        // the δ > q/n² precondition is enforced even when the radius is overridden
        let derived_r = radius_for(config.q, config.delta, config.epsilon, params.eta, n)?;
        let r = config.r_override.unwrap_or(derived_r);
        let t = match config.t_override {
            Some(t) => t,
            None => {
                let s = 2.0 * (n.max(1) as f64).ln() / params.log_inv_one_minus_eps();
                ball_budget(&params, r, s)?
            }
        };
        Ok(LcaSession {
            inst,
            measure,
            params,
            r,
            t,
            q_max: config.q,
            seed: config.seed,
            trial: config.trial,
            keep_trajectories: config.keep_trajectories,
            in_s: vec![false; inst.num_constraints()],
            touched: vec![false; n],
            sigma: Assignment::unassigned(n),
            answers: Vec::new(),
            answered: vec![None; n],
            resampled_after_answer: Vec::new(),
            results: Vec::new(),
            trajectories: Vec::new(),
            aborted: false,
            scratch: BallScratch::new(),
        })
    }

    pub fn radius(&self) -> u32 {
        self.r
    }

    pub fn budget(&self) -> u64 {
        self.t
    }

    pub fn params(&self) -> &Params {
        &self.params
    }

    pub fn instance(&self) -> &'a Instance {
        self.inst
    }

    pub fn query_cap(&self) -> usize {
        self.q_max
    }

    pub fn queries_made(&self) -> usize {
        self.results.len()
    }

    pub fn is_aborted(&self) -> bool {
        self.aborted
    }

    pub fn answers(&self) -> &[Answer] {
        &self.answers
    }

    pub fn results(&self) -> &[QueryResult] {
        &self.results
    }

    /// Per-query trajectories, when the session keeps them.
    pub fn trajectories(&self) -> &[Trajectory] {
        &self.trajectories
    }

    /// The shared partial state.
    pub fn state(&self) -> &Assignment {
        &self.sigma
    }

    pub fn is_touched(&self, x: usize) -> bool {
        self.touched[x]
    }

    /// Whether constraint `i` belongs to some queried subproblem.
    pub fn in_s(&self, i: usize) -> bool {
        self.in_s[i]
    }

    /// Per answer, whether its variable was resampled after it was answered.
    pub fn error_events(&self) -> &[bool] {
        &self.resampled_after_answer
    }

    /// Whether any `E_i` has occurred so far.
    pub fn any_error_event(&self) -> bool {
        self.resampled_after_answer.iter().any(|&e| e)
    }

    fn query_rng(&self, index: usize) -> LllRng {
        substream(self.seed, &[self.trial, index as u64])
    }

    pub fn query(&mut self, x: usize) -> Result<QueryResult, LcaError> {
        if self.aborted {
            return Err(LcaError::Aborted);
        }
        if self.results.len() >= self.q_max {
            return Err(LcaError::QueryCapExceeded(self.q_max));
        }
        if x >= self.inst.num_vars() {
            return Err(CspError::VarOutOfRange(x).into());
        }
        let index = self.results.len();
        if let Some(prev) = self.answered[x] {
            let value = self.answers[prev].value;
            self.record_answer(x, value, index);
            let result = QueryResult { variable: x, outcome: QueryOutcome::Answer(value), resamples: 0, ball_size: 0, fresh: 0, replayed: true };
            self.results.push(result.clone());
            return Ok(result);
        }
        let mut rng = self.query_rng(index);
        let sub = self.inst.induced_subproblem_with(&mut self.scratch, x, self.r as usize)?;
        let mut fresh = 0;
        let measure = self.measure;
        if sub.is_empty() && !self.touched[x] {
            self.sigma.set(x, measure.sample(x, &mut rng));
            self.touched[x] = true;
            fresh += 1;
        }
        for &v in sub.variables() {
            if !self.touched[v] {
                self.sigma.set(v, measure.sample(v, &mut rng));
                self.touched[v] = true;
                fresh += 1;
            }
        }
        for &c in sub.constraints() {
            self.in_s[c] = true;
        }
        let log = if self.keep_trajectories { LogLevel::Full } else { LogLevel::WitnessOnly };
        let state = std::mem::take(&mut self.sigma);
        let mut trajectory = depth_first_mt_with(&sub, state, measure, &mut rng, MtOptions { max_steps: self.t, log }, &mut ())?;
        let ball_size = sub.constraints().len();
        self.sigma = std::mem::take(&mut trajectory.final_state);
        self.flag_resampled_answers(&trajectory);
        let resamples = trajectory.steps.len() as u64;
        let outcome = if trajectory.terminated {
            let value = self.sigma.get(x).expect("queried variable is touched");
            self.record_answer(x, value, index);
            QueryOutcome::Answer(value)
        } else {
            self.aborted = true;
            QueryOutcome::Abort
        };
        if self.keep_trajectories {
            trajectory.final_state = self.sigma.clone();
            self.trajectories.push(trajectory);
        }
        let result = QueryResult { variable: x, outcome, resamples, ball_size, fresh, replayed: false };
        self.results.push(result.clone());
        Ok(result)
    }

    fn record_answer(&mut self, x: usize, value: Value, query: usize) {
        if self.answered[x].is_none() {
            self.answered[x] = Some(self.answers.len());
        }
        self.answers.push(Answer { variable: x, value, query });
        self.resampled_after_answer.push(false);
    }

    fn flag_resampled_answers(&mut self, trajectory: &Trajectory) {
        if self.answers.is_empty() {
            return;
        }
        for step in &trajectory.steps {
            for &v in self.inst.scope(step.constraint) {
                if self.answered[v].is_some() {
                    for (a, flag) in self.answers.iter().zip(self.resampled_after_answer.iter_mut()) {
                        if a.variable == v {
                            *flag = true;
                        }
                    }
                }
            }
        }
    }

    /// Samples every untouched variable and runs global depth-first
    /// resampling to termination, extending the session's prefix into a
    /// complete run. Returns the flawless final state.
    pub fn continue_to_completion(&mut self, max_steps: u64) -> Result<Assignment, LcaError> {
        Ok(self.continue_to_completion_logged(max_steps, LogLevel::WitnessOnly)?.final_state)
    }

    /// As [`LcaSession::continue_to_completion`], returning the continuation's trajectory.
    pub fn continue_to_completion_logged(&mut self, max_steps: u64, log: LogLevel) -> Result<Trajectory, LcaError> {
        if self.aborted {
            return Err(LcaError::Aborted);
        }
        let mut rng = substream(self.seed, &[self.trial, COMPLETION_STREAM]);
        let mut state = self.sigma.clone();
        for x in 0..self.inst.num_vars() {
            if !self.touched[x] {
                state.set(x, self.measure.sample(x, &mut rng));
            }
        }
        let trajectory = run_from(self.inst, self.measure, state, &mut rng, MtOptions { max_steps, log })?;
        self.flag_resampled_answers(&trajectory);
        if !trajectory.terminated {
            return Err(LcaError::CompletionExhausted(max_steps));
        }
        Ok(trajectory)
    }

    /// Compares every answer with `final_state`, which must be flawless.
    pub fn verify_consistency(&self, final_state: &Assignment) -> Result<Consistency, LcaError> {
        if let Some(i) = self.inst.violated_constraints(final_state)?.first() {
            return Err(LcaError::InvalidFinal(*i));
        }
        let first_violation = self.answers.iter().find(|a| final_state.get(a.variable) != Some(a.value)).map(|a| a.query);
        Ok(Consistency { consistent: first_violation.is_none(), first_violation })
    }

    /// One line per query: index, variable, ball size, resamples, answer or abort.
    pub fn transcript(&self) -> String {
        let mut out = String::new();
        for (i, r) in self.results.iter().enumerate() {
            let answer = match r.outcome {
                QueryOutcome::Answer(v) => v.to_string(),
                QueryOutcome::Abort => "abort".into(),
            };
            let _ = writeln!(out, "query={i} var={} ball={} resamples={} fresh={} answer={answer}", r.variable, r.ball_size, r.resamples, r.fresh);
        }
        out
    }
}
