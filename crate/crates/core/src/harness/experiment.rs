//! Seeded experiment runs over one instance, emitting a record stream.

use std::io::Write;
use std::time::Instant;

use rand::seq::index::sample;

use crate::apps::sat::{gst_measure, sat_psi_vector, CnfFormula};
use crate::csp::{Instance, ProductMeasure};
use crate::harness::records::{Record, RecordWriter};
use crate::harness::HarnessError;
use crate::lca::{LcaConfig, LcaError, LcaSession, QueryOutcome};
use crate::lll::{check_general_lll, derive_params, feasible_interval, LllError, Psi};
use crate::mt::{ball_budget, resample_full};
use crate::rng::substream;
use crate::stats::{spearman, Estimate, SpearmanTest};

/// Label of the stream that picks each trial's query variables.
const QUERY_PICK_STREAM: u64 = u64::MAX - 1;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Mode {
    /// Evaluate the general condition once.
    Check,
    /// Derived parameters, radius, budget and feasible interval.
    Analyze,
    /// Global resampling per trial.
    Solve,
    /// Queries only.
    Lca,
    /// Queries, completion of the run and a consistency check per trial.
    Verify,
}

impl Mode {
    pub fn name(self) -> &'static str {
        match self {
            Mode::Check => "check",
            Mode::Analyze => "analyze",
            Mode::Solve => "solve",
            Mode::Lca => "lca",
            Mode::Verify => "verify",
        }
    }
}

/// An instance with its measure and weights.
#[derive(Clone, Debug)]
pub struct Problem {
    pub instance: Instance,
    pub measure: ProductMeasure,
    pub psi: Psi,
}

impl Problem {
    /// k-SAT with the biased measure and uniform clause weights.
    pub fn sat(cnf: &CnfFormula) -> Result<Self, HarnessError> {
        Ok(Problem { instance: cnf.to_instance()?, measure: gst_measure(cnf)?, psi: sat_psi_vector(cnf)? })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentConfig {
    /// Where the instance came from, recorded verbatim.
    pub source: String,
    pub mode: Mode,
    pub q: usize,
    pub delta: f64,
    /// `None` uses the slack measured by the general condition.
    pub epsilon: Option<f64>,
    pub r_override: Option<u32>,
    pub t_override: Option<u64>,
    pub seed: u64,
    pub trials: usize,
    /// Resampling cap for global runs and completions.
    pub completion_steps: u64,
    /// Emit wall-clock times; off by default so streams are reproducible.
    pub timing: bool,
}

impl ExperimentConfig {
    pub fn new(source: &str, mode: Mode) -> Self {
        ExperimentConfig {
            source: source.to_string(),
            mode,
            q: 10,
            delta: 0.1,
            epsilon: None,
            r_override: None,
            t_override: None,
            seed: 0,
            trials: 100,
            completion_steps: 10_000_000,
            timing: false,
        }
    }

    pub fn fields(&self) -> Vec<(String, String)> {
        let opt = |v: Option<String>| v.unwrap_or_else(|| "derived".into());
        vec![
            ("source".into(), self.source.clone()),
            ("mode".into(), self.mode.name().into()),
            ("q".into(), self.q.to_string()),
            ("delta".into(), self.delta.to_string()),
            ("epsilon".into(), opt(self.epsilon.map(|e| e.to_string()))),
            ("r".into(), opt(self.r_override.map(|r| r.to_string()))),
            ("t".into(), opt(self.t_override.map(|t| t.to_string()))),
            ("seed".into(), self.seed.to_string()),
            ("trials".into(), self.trials.to_string()),
            ("completion_steps".into(), self.completion_steps.to_string()),
            ("timing".into(), self.timing.to_string()),
        ]
    }

    fn validate(&self, n: usize) -> Result<(), HarnessError> {
        if self.trials == 0 {
            return Err(HarnessError::Config("trials must be at least 1".into()));
        }
        if matches!(self.mode, Mode::Lca | Mode::Verify) && (self.q == 0 || self.q > n) {
            return Err(HarnessError::Config(format!("q = {} with {n} variables", self.q)));
        }
        Ok(())
    }
}

/// Aggregates over the trials of one run. Every estimate carries its sample
/// size and standard error.
#[derive(Clone, Debug, PartialEq)]
pub struct Summary {
    pub trials: usize,
    /// Abort, inconsistent answer, or a per-trial error.
    pub error_rate: Estimate,
    pub abort_rate: Estimate,
    pub inconsistency_rate: Estimate,
    /// Trials that ended with an error other than an abort.
    pub trial_failures: usize,
    /// Some answered variable was resampled after its answer.
    pub error_event_rate: Estimate,
    pub resamples_per_query: Estimate,
    pub max_resamples_per_query: u64,
    pub max_ball: usize,
    pub radius: u32,
    pub budget: u64,
    /// `(kd)^{r+1}`.
    pub ball_bound: f64,
    /// Queries whose resamples exceeded the budget or whose ball exceeded the bound.
    pub locality_violations: usize,
    pub epsilon: f64,
}

impl Summary {
    fn record(&self) -> Record {
        let est = |r: Record, name: &str, e: &Estimate| {
            r.field(name, format!("{:.6}", e.mean)).field(&format!("{name}_se"), format!("{:.6}", e.std_err)).field(&format!("{name}_n"), e.n)
        };
        let mut r = Record::new("summary").field("trials", self.trials).field("epsilon", self.epsilon).field("radius", self.radius).field("budget", self.budget);
        r = est(r, "error_rate", &self.error_rate);
        r = est(r, "abort_rate", &self.abort_rate);
        r = est(r, "inconsistency_rate", &self.inconsistency_rate);
        r = est(r, "error_event_rate", &self.error_event_rate);
        r = est(r, "resamples_per_query", &self.resamples_per_query);
        r.field("trial_failures", self.trial_failures)
            .field("max_resamples_per_query", self.max_resamples_per_query)
            .field("max_ball", self.max_ball)
            .field("ball_bound", self.ball_bound)
            .field("locality_violations", self.locality_violations)
    }
}

fn resolve_epsilon(config: &ExperimentConfig, problem: &Problem) -> Result<f64, HarnessError> {
    let report = check_general_lll(&problem.instance, &problem.measure, &problem.psi)?;
    match config.epsilon {
        Some(e) => Ok(e),
        None if report.epsilon > 0.0 => Ok(report.epsilon),
        None => Err(LllError::Infeasible(format!("general condition fails, measured slack {}", report.epsilon)).into()),
    }
}

fn lca_config(config: &ExperimentConfig, epsilon: f64, trial: usize) -> LcaConfig {
    let mut c = LcaConfig::new(config.q, config.delta, epsilon).seed(config.seed, trial as u64);
    c.r_override = config.r_override;
    c.t_override = config.t_override;
    c
}

#[derive(Default)]
struct Tally {
    trials: usize,
    errors: usize,
    aborts: usize,
    inconsistent: usize,
    failures: usize,
    error_events: usize,
    per_query: Vec<f64>,
    max_resamples: u64,
    max_ball: usize,
    locality_violations: usize,
}

/// Runs `config.trials` trials of `config.mode` on `problem`, writing one
/// record per trial and a closing summary to `out`. Per-trial errors are
/// recorded and counted; they never stop the run.
pub fn run_experiment<W: Write>(config: &ExperimentConfig, problem: &Problem, out: W) -> Result<Summary, HarnessError> {
    let inst = &problem.instance;
    problem.measure.check_against(inst)?;
    config.validate(inst.num_vars())?;
    let mut writer = RecordWriter::new(out, &config.fields())?;
    match config.mode {
        Mode::Check => run_check(problem, &mut writer),
        Mode::Analyze => run_analyze(config, problem, &mut writer),
        Mode::Solve => run_solve(config, problem, &mut writer),
        Mode::Lca | Mode::Verify => run_queries(config, problem, &mut writer),
    }
}

fn single_trial_summary(epsilon: f64, radius: u32, budget: u64) -> Summary {
    let zero = Estimate::bernoulli(0, 1);
    Summary {
        trials: 1,
        error_rate: zero,
        abort_rate: zero,
        inconsistency_rate: zero,
        trial_failures: 0,
        error_event_rate: zero,
        resamples_per_query: Estimate::from_samples(&[0.0]),
        max_resamples_per_query: 0,
        max_ball: 0,
        radius,
        budget,
        ball_bound: 0.0,
        locality_violations: 0,
        epsilon,
    }
}

fn run_check<W: Write>(problem: &Problem, writer: &mut RecordWriter<W>) -> Result<Summary, HarnessError> {
    let report = check_general_lll(&problem.instance, &problem.measure, &problem.psi)?;
    let worst = report.lhs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let failing = report.lhs.iter().filter(|&&l| l > 1.0).count();
    writer.write(
        Record::new("check")
            .field("holds", report.holds())
            .field("epsilon", report.epsilon)
            .field("max_lhs", worst)
            .field("failing", failing)
            .field("n", problem.instance.num_vars())
            .field("m", problem.instance.num_constraints()),
    )?;
    Ok(single_trial_summary(report.epsilon, 0, 0))
}

fn run_analyze<W: Write>(config: &ExperimentConfig, problem: &Problem, writer: &mut RecordWriter<W>) -> Result<Summary, HarnessError> {
    let epsilon = resolve_epsilon(config, problem)?;
    let params = derive_params(&problem.instance, &problem.psi, epsilon)?;
    let session = LcaSession::open_with_params(&problem.instance, &problem.measure, params.clone(), &lca_config(config, epsilon, 0))?;
    let (r, t) = (session.radius(), session.budget());
    let interval = feasible_interval(config.q, t as f64, config.delta, &params)?;
    let radii = interval.radii.map_or("empty".to_string(), |(a, b)| format!("{a}..{b}"));
    writer.write(
        Record::new("analyze")
            .field("epsilon", epsilon)
            .field("zeta", params.zeta)
            .field("eta", params.eta)
            .field("xi", params.xi)
            .field("lambda", params.lambda)
            .field("k", params.k)
            .field("d", params.d)
            .field("n", params.n)
            .field("m", params.m)
            .field("radius", r)
            .field("budget", t)
            .field("budget_at_radius", ball_budget(&params, r, interval.s)?)
            .field("feasible_radii", radii),
    )?;
    Ok(single_trial_summary(epsilon, r, t))
}

fn run_solve<W: Write>(config: &ExperimentConfig, problem: &Problem, writer: &mut RecordWriter<W>) -> Result<Summary, HarnessError> {
    let mut steps = Vec::with_capacity(config.trials);
    let mut unfinished = 0;
    for trial in 0..config.trials {
        let start = Instant::now();
        let mut rng = substream(config.seed, &[trial as u64]);
        let run = resample_full(&problem.instance, &problem.measure, &mut rng, config.completion_steps);
        steps.push(run.num_steps() as f64);
        if !run.terminated {
            unfinished += 1;
        }
        let mut rec = Record::new("trial").field("trial", trial).field("seed", config.seed).field("resamples", run.num_steps()).field("terminated", run.terminated);
        if config.timing {
            rec = rec.field("wall_ms", start.elapsed().as_secs_f64() * 1e3);
        }
        writer.write(rec)?;
    }
    let mut summary = single_trial_summary(config.epsilon.unwrap_or(f64::NAN), 0, config.completion_steps);
    summary.trials = config.trials;
    summary.abort_rate = Estimate::bernoulli(unfinished, config.trials);
    summary.error_rate = summary.abort_rate;
    summary.inconsistency_rate = Estimate::bernoulli(0, config.trials);
    summary.error_event_rate = Estimate::bernoulli(0, config.trials);
    summary.resamples_per_query = Estimate::from_samples(&steps);
    summary.max_resamples_per_query = steps.iter().cloned().fold(0.0, f64::max) as u64;
    writer.write(summary.record())?;
    Ok(summary)
}

fn run_queries<W: Write>(config: &ExperimentConfig, problem: &Problem, writer: &mut RecordWriter<W>) -> Result<Summary, HarnessError> {
    let inst = &problem.instance;
    let epsilon = resolve_epsilon(config, problem)?;
    let params = derive_params(inst, &problem.psi, epsilon)?;
    // opening once surfaces configuration errors before any trial runs
    let probe = LcaSession::open_with_params(inst, &problem.measure, params.clone(), &lca_config(config, epsilon, 0))?;
    let (radius, budget) = (probe.radius(), probe.budget());
    drop(probe);
    let ball_bound = params.kd().powf(radius as f64 + 1.0);
    let mut tally = Tally::default();
    for trial in 0..config.trials {
        let start = Instant::now();
        let mut session = LcaSession::open_with_params(inst, &problem.measure, params.clone(), &lca_config(config, epsilon, trial))?;
        let mut pick = substream(config.seed, &[trial as u64, QUERY_PICK_STREAM]);
        let queries = sample(&mut pick, inst.num_vars(), config.q).into_vec();
        let mut rec = Record::new("trial").field("trial", trial).field("seed", config.seed);
        let outcome = run_trial(config.mode, &mut session, &queries, config.completion_steps);
        for r in session.results() {
            tally.per_query.push(r.resamples as f64);
            tally.max_resamples = tally.max_resamples.max(r.resamples);
            tally.max_ball = tally.max_ball.max(r.ball_size);
            if r.resamples > budget || r.ball_size as f64 > ball_bound {
                tally.locality_violations += 1;
            }
        }
        let answers: Vec<String> = session
            .results()
            .iter()
            .map(|r| match r.outcome {
                QueryOutcome::Answer(v) => format!("{}:{v}", r.variable),
                QueryOutcome::Abort => format!("{}:abort", r.variable),
            })
            .collect();
        let resamples: u64 = session.results().iter().map(|r| r.resamples).sum();
        let error_event = session.any_error_event();
        rec = rec
            .field("answers", answers.join(","))
            .field("resamples", resamples)
            .field("aborted", session.is_aborted())
            .field("error_event", error_event);
        tally.trials += 1;
        tally.error_events += error_event as usize;
        match outcome {
            Ok(consistent) => {
                if session.is_aborted() {
                    tally.aborts += 1;
                    tally.errors += 1;
                } else if consistent == Some(false) {
                    tally.inconsistent += 1;
                    tally.errors += 1;
                }
                if let Some(c) = consistent {
                    rec = rec.field("consistent", c);
                }
            }
            Err(e) => {
                tally.failures += 1;
                tally.errors += 1;
                rec = rec.field("error", e);
            }
        }
        if config.timing {
            rec = rec.field("wall_ms", start.elapsed().as_secs_f64() * 1e3);
        }
        writer.write(rec)?;
    }
    let n = tally.trials;
    let summary = Summary {
        trials: n,
        error_rate: Estimate::bernoulli(tally.errors, n),
        abort_rate: Estimate::bernoulli(tally.aborts, n),
        inconsistency_rate: Estimate::bernoulli(tally.inconsistent, n),
        trial_failures: tally.failures,
        error_event_rate: Estimate::bernoulli(tally.error_events, n),
        resamples_per_query: Estimate::from_samples(&tally.per_query),
        max_resamples_per_query: tally.max_resamples,
        max_ball: tally.max_ball,
        radius,
        budget,
        ball_bound,
        locality_violations: tally.locality_violations,
        epsilon,
    };
    writer.write(summary.record())?;
    Ok(summary)
}

/// Runs the queries and, in verify mode, completion and the consistency
/// check. Returns whether the answers were consistent, when checked.
fn run_trial(mode: Mode, session: &mut LcaSession<'_>, queries: &[usize], completion_steps: u64) -> Result<Option<bool>, LcaError> {
    for &x in queries {
        if session.query(x)?.outcome == QueryOutcome::Abort {
            return Ok(None);
        }
    }
    if mode != Mode::Verify {
        return Ok(None);
    }
    let final_state = session.continue_to_completion(completion_steps)?;
    Ok(Some(session.verify_consistency(&final_state)?.consistent))
}

#[derive(Clone, Debug, PartialEq)]
pub struct SweepSummary {
    pub points: Vec<(u32, Summary)>,
    /// Trend of the error rate against the radius.
    pub trend: SpearmanTest,
}

/// Verify-mode runs at each radius in `radii`, all in one stream. Each
/// point's records carry a `radius` field.
pub fn run_sweep<W: Write>(config: &ExperimentConfig, problem: &Problem, radii: &[u32], out: W) -> Result<SweepSummary, HarnessError> {
    if radii.len() < 2 {
        return Err(HarnessError::Config("a sweep needs at least two radii".into()));
    }
    let mut fields = config.fields();
    fields.push(("radii".into(), radii.iter().map(u32::to_string).collect::<Vec<_>>().join(",")));
    let mut writer = RecordWriter::new(out, &fields)?;
    let mut points = Vec::with_capacity(radii.len());
    for &r in radii {
        let mut point = config.clone();
        point.mode = Mode::Verify;
        point.r_override = Some(r);
        let mut buf = Vec::new();
        let summary = run_experiment(&point, problem, &mut buf)?;
        // re-tag the point's records into the sweep stream
        for line in String::from_utf8_lossy(&buf).lines().skip(2) {
            let rec = Record::parse(line)?;
            let mut tagged = Record::new(&rec.kind).field("radius", r);
            tagged.fields.extend(rec.fields.into_iter().filter(|(k, _)| k != "config"));
            writer.write(tagged)?;
        }
        points.push((r, summary));
    }
    let xs: Vec<f64> = points.iter().map(|p| p.0 as f64).collect();
    let ys: Vec<f64> = points.iter().map(|p| p.1.error_rate.mean).collect();
    let trend = spearman(&xs, &ys);
    writer.write(
        Record::new("trend").field("rho", trend.rho).field("p_increasing", trend.p_increasing).field("p_decreasing", trend.p_decreasing),
    )?;
    Ok(SweepSummary { points, trend })
}
