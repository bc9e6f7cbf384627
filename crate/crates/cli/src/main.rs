//! `lll`: check conditions, solve, answer local queries and run experiments.
//!
//! Exit codes: 0 success, 1 usage or input error, 2 infeasible parameters,
//! 3 experiment-level failure.

use std::fs;
use std::io::{self, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use lll_lca::apps::coloring::coloring_instance;
use lll_lca::apps::hypergraph::hypergraph_instance;
use lll_lca::apps::sat::CnfFormula;
use lll_lca::apps::AppError;
use lll_lca::harness::dimacs::{parse_dimacs, write_dimacs};
use lll_lca::harness::edgelist::{parse_graph, parse_hypergraph, write_graph, write_hypergraph};
use lll_lca::harness::experiment::{run_experiment, run_sweep, ExperimentConfig, Mode, Problem};
use lll_lca::harness::gen::{gen_clustered_bipartite, gen_gnp, gen_hypergraph, gen_ksat, gen_ksat_with_clauses};
use lll_lca::harness::HarnessError;
use lll_lca::lca::{LcaConfig, LcaError, LcaSession};
use lll_lca::lll::{check_general_lll, check_general_lll_with_probabilities, derive_params, LllError};
use lll_lca::mt::resample_full;
use lll_lca::rng::substream;
use lll_lca::witness::witness_tree;

#[derive(Parser, Debug)]
#[command(name = "lll", version, about = "Local computation of Lovász Local Lemma solutions")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Evaluate the general condition and report the slack.
    Check(CheckArgs),
    /// Run global resampling once and print the assignment.
    Solve(SolveArgs),
    /// Answer queries for chosen variables from one session.
    Lca(LcaArgs),
    /// Seeded trials of query, completion and consistency check.
    Verify(ExperimentArgs),
    /// Verify-mode trials over a range of radii with a trend test.
    Sweep(SweepArgs),
    /// Print the witness trees of one resampling run.
    Witness(WitnessArgs),
    /// Generate an instance.
    Gen(GenArgs),
}

/// A CNF from a DIMACS file or from the k-SAT generator.
#[derive(Args, Debug)]
struct CnfSource {
    /// DIMACS CNF file.
    #[arg(long, conflicts_with = "gen_n")]
    cnf: Option<PathBuf>,
    /// Generate a k-SAT formula with this many variables.
    #[arg(long = "gen-n")]
    gen_n: Option<usize>,
    #[arg(long = "gen-k", default_value_t = 8)]
    gen_k: usize,
    /// Occurrence cap per variable.
    #[arg(long = "gen-d", default_value_t = 20)]
    gen_d: usize,
    #[arg(long = "gen-seed", default_value_t = 0)]
    gen_seed: u64,
}

impl CnfSource {
    fn load(&self) -> Result<(CnfFormula, String), CliError> {
        match (&self.cnf, self.gen_n) {
            (Some(path), _) => {
                let text = fs::read_to_string(path).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?;
                let cnf = parse_dimacs(&text).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?;
                Ok((cnf, format!("file:{}", path.display())))
            }
            (None, Some(n)) => {
                let cnf = gen_ksat(n, self.gen_k, self.gen_d, self.gen_seed)?;
                Ok((cnf, format!("gen-ksat:n={n},k={},d={},seed={}", self.gen_k, self.gen_d, self.gen_seed)))
            }
            (None, None) => Err(CliError::Usage("give --cnf <file> or --gen-n <n>".into())),
        }
    }
}

#[derive(Args, Debug)]
struct CheckArgs {
    #[command(flatten)]
    source: CnfSource,
    /// Check a graph-coloring instance from an edge-list file instead.
    #[arg(long, conflicts_with_all = ["cnf", "gen_n", "hypergraph"])]
    graph: Option<PathBuf>,
    /// Neighborhood sparsity `B` for --graph; defaults to the largest admissible value.
    #[arg(long)]
    b: Option<f64>,
    /// Samples per event when estimating coloring event probabilities.
    #[arg(long, default_value_t = 20_000)]
    samples: usize,
    /// Check a hypergraph 2-coloring instance from an edge-list file instead.
    #[arg(long, conflicts_with_all = ["cnf", "gen_n"])]
    hypergraph: Option<PathBuf>,
    /// Also print derived parameters, radius and budget.
    #[arg(long)]
    analyze: bool,
    #[command(flatten)]
    params: QueryParams,
}

#[derive(Args, Debug, Clone)]
struct QueryParams {
    /// Number of queries the session must serve.
    #[arg(long, default_value_t = 10)]
    q: usize,
    /// Target failure probability.
    #[arg(long, default_value_t = 0.1)]
    delta: f64,
    /// Slack; defaults to the slack measured by the general condition.
    #[arg(long)]
    epsilon: Option<f64>,
    /// Radius override.
    #[arg(long)]
    radius: Option<u32>,
    /// Per-query resampling budget override.
    #[arg(long)]
    budget: Option<u64>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args, Debug)]
struct SolveArgs {
    #[command(flatten)]
    source: CnfSource,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long = "max-steps", default_value_t = 10_000_000)]
    max_steps: u64,
}

#[derive(Args, Debug)]
struct LcaArgs {
    #[command(flatten)]
    source: CnfSource,
    #[command(flatten)]
    params: QueryParams,
    /// 1-based variables to query, in order.
    #[arg(long = "query", required = true, num_args = 1..)]
    queries: Vec<usize>,
    #[arg(long, default_value_t = 0)]
    trial: u64,
}

#[derive(Args, Debug)]
struct ExperimentArgs {
    #[command(flatten)]
    source: CnfSource,
    #[command(flatten)]
    params: QueryParams,
    #[arg(long, default_value_t = 100)]
    trials: usize,
    /// Resampling cap for completions.
    #[arg(long = "completion-steps", default_value_t = 10_000_000)]
    completion_steps: u64,
    /// Record wall-clock time per trial.
    #[arg(long)]
    timing: bool,
    /// Write records here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct SweepArgs {
    #[command(flatten)]
    experiment: ExperimentArgs,
    /// Smallest radius.
    #[arg(long = "r-min", default_value_t = 0)]
    r_min: u32,
    /// Largest radius.
    #[arg(long = "r-max")]
    r_max: u32,
}

#[derive(Args, Debug)]
struct WitnessArgs {
    #[command(flatten)]
    source: CnfSource,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Only the tree of this 1-based step.
    #[arg(long)]
    step: Option<usize>,
    #[arg(long = "max-steps", default_value_t = 10_000_000)]
    max_steps: u64,
}

#[derive(ValueEnum, Clone, Copy, Debug)]
enum GenKind {
    Ksat,
    Gnp,
    Bipartite,
    Hypergraph,
}

#[derive(Args, Debug)]
struct GenArgs {
    #[arg(value_enum)]
    kind: GenKind,
    /// Variables or vertices (clusters for `bipartite`).
    #[arg(long)]
    n: usize,
    #[arg(long, default_value_t = 8)]
    k: usize,
    #[arg(long, default_value_t = 20)]
    d: usize,
    /// Number of clauses; defaults to n·d/k.
    #[arg(long)]
    m: Option<usize>,
    /// Edge probability for graphs.
    #[arg(long, default_value_t = 0.05)]
    p: f64,
    /// Side size of each bipartite cluster.
    #[arg(long, default_value_t = 4)]
    side: usize,
    /// Hyperedges as `size:count`, repeatable.
    #[arg(long = "edges")]
    edges: Vec<String>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug)]
enum CliError {
    Usage(String),
    Infeasible(String),
    Failure(String),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Infeasible(_) => 2,
            CliError::Failure(_) => 3,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Usage(m) | CliError::Infeasible(m) | CliError::Failure(m) => f.write_str(m),
        }
    }
}

fn classify_lll(e: LllError) -> CliError {
    match e {
        LllError::Infeasible(_) | LllError::EpsilonOutOfRange(_) | LllError::Undefined(_) => CliError::Infeasible(e.to_string()),
        LllError::TooLarge { .. } => CliError::Infeasible(e.to_string()),
        _ => CliError::Failure(e.to_string()),
    }
}

impl From<LllError> for CliError {
    fn from(e: LllError) -> Self {
        classify_lll(e)
    }
}

impl From<AppError> for CliError {
    fn from(e: AppError) -> Self {
        match e {
            AppError::Lll(l) => classify_lll(l),
            AppError::Lca(l) => l.into(),
            AppError::Infeasible(_) | AppError::KTooSmall(_) | AppError::DegreeTooSmall(_) | AppError::DenseNeighborhood { .. } | AppError::EmptyPalette => {
                CliError::Infeasible(e.to_string())
            }
            AppError::Csp(_) | AppError::GreedyStuck(_) | AppError::Uncolored(_) => CliError::Failure(e.to_string()),
            _ => CliError::Usage(e.to_string()),
        }
    }
}

impl From<LcaError> for CliError {
    fn from(e: LcaError) -> Self {
        match e {
            LcaError::Lll(l) => classify_lll(l),
            LcaError::QueryCapExceeded(_) => CliError::Usage(e.to_string()),
            _ => CliError::Failure(e.to_string()),
        }
    }
}

impl From<HarnessError> for CliError {
    fn from(e: HarnessError) -> Self {
        match e {
            HarnessError::App(a) => a.into(),
            HarnessError::Lll(l) => classify_lll(l),
            HarnessError::Lca(l) => l.into(),
            HarnessError::Parse { .. } | HarnessError::Config(_) => CliError::Usage(e.to_string()),
            HarnessError::Csp(_) | HarnessError::Io(_) => CliError::Failure(e.to_string()),
        }
    }
}

fn io_failure(e: io::Error) -> CliError {
    CliError::Failure(e.to_string())
}

fn output(path: &Option<PathBuf>) -> Result<Box<dyn Write>, CliError> {
    match path {
        Some(p) => Ok(Box::new(io::BufWriter::new(fs::File::create(p).map_err(io_failure)?))),
        None => Ok(Box::new(io::stdout().lock())),
    }
}

fn experiment_config(source: String, mode: Mode, args: &ExperimentArgs) -> ExperimentConfig {
    let p = &args.params;
    let mut c = ExperimentConfig::new(&source, mode);
    c.q = p.q;
    c.delta = p.delta;
    c.epsilon = p.epsilon;
    c.r_override = p.radius;
    c.t_override = p.budget;
    c.seed = p.seed;
    c.trials = args.trials;
    c.completion_steps = args.completion_steps;
    c.timing = args.timing;
    c
}

fn cmd_check(args: &CheckArgs) -> Result<(), CliError> {
    let mut out = io::stdout().lock();
    if let Some(path) = &args.graph {
        let text = fs::read_to_string(path).map_err(|e| CliError::Usage(e.to_string()))?;
        let g = parse_graph(&text)?;
        let b = args.b.unwrap_or(g.neighborhood_deficiency() as f64);
        let setup = coloring_instance(&g, b)?;
        // predicate events have no exact mass; estimate it by sampling
        let mut rng = substream(args.params.seed, &[0]);
        let mut probs = Vec::with_capacity(setup.instance.num_constraints());
        for i in 0..setup.instance.num_constraints() {
            probs.push(setup.instance.estimate_event_probability(&setup.measure, i, args.samples, &mut rng).mean);
        }
        let report = check_general_lll_with_probabilities(&setup.instance, &probs, &setup.psi)?;
        writeln!(out, "graph vertices={} max_degree={} b={b} z={} palette={} estimated_from={}", g.num_vertices(), setup.delta, setup.z, setup.palette, args.samples)
            .map_err(io_failure)?;
        return finish_check(&mut out, report.holds(), report.epsilon);
    }
    if let Some(path) = &args.hypergraph {
        let text = fs::read_to_string(path).map_err(|e| CliError::Usage(e.to_string()))?;
        let h = parse_hypergraph(&text)?;
        let setup = hypergraph_instance(&h)?;
        let report = check_general_lll(&setup.instance, &setup.measure, &setup.psi)?;
        writeln!(out, "hypergraph vertices={} edges={} weighted_degree={} degree_condition={}", h.num_vertices(), h.edges().len(), setup.weighted_degree, setup.condition_holds())
            .map_err(io_failure)?;
        return finish_check(&mut out, report.holds(), report.epsilon);
    }
    let (cnf, source) = args.source.load()?;
    let problem = Problem::sat(&cnf)?;
    let report = check_general_lll(&problem.instance, &problem.measure, &problem.psi)?;
    writeln!(out, "cnf vars={} clauses={} k={} d={} source={source}", cnf.num_vars(), cnf.num_clauses(), cnf.k(), cnf.d()).map_err(io_failure)?;
    if args.analyze && report.epsilon > 0.0 {
        let mut c = ExperimentConfig::new(&source, Mode::Analyze);
        c.q = args.params.q;
        c.delta = args.params.delta;
        c.epsilon = args.params.epsilon;
        c.r_override = args.params.radius;
        c.t_override = args.params.budget;
        c.trials = 1;
        run_experiment(&c, &problem, &mut out)?;
    }
    finish_check(&mut out, report.holds(), report.epsilon)
}

fn finish_check(out: &mut impl Write, holds: bool, epsilon: f64) -> Result<(), CliError> {
    writeln!(out, "condition holds={holds} epsilon={epsilon}").map_err(io_failure)?;
    if holds {
        Ok(())
    } else {
        Err(CliError::Infeasible(format!("condition fails, epsilon = {epsilon}")))
    }
}

fn cmd_solve(args: &SolveArgs) -> Result<(), CliError> {
    let (cnf, _) = args.source.load()?;
    let problem = Problem::sat(&cnf)?;
    let mut rng = substream(args.seed, &[0]);
    let run = resample_full(&problem.instance, &problem.measure, &mut rng, args.max_steps);
    let mut out = io::stdout().lock();
    writeln!(out, "c resamples {}", run.num_steps()).map_err(io_failure)?;
    if !run.terminated {
        writeln!(out, "s UNKNOWN").map_err(io_failure)?;
        return Err(CliError::Failure(format!("no solution within {} resamples", args.max_steps)));
    }
    let values = run.final_state.to_full().expect("full state");
    debug_assert!(cnf.satisfied_by(&values));
    writeln!(out, "s SATISFIABLE").map_err(io_failure)?;
    let lits: Vec<String> = values.iter().enumerate().map(|(x, &v)| if v == 1 { format!("{}", x + 1) } else { format!("-{}", x + 1) }).collect();
    writeln!(out, "v {} 0", lits.join(" ")).map_err(io_failure)
}

fn cmd_lca(args: &LcaArgs) -> Result<(), CliError> {
    let (cnf, _) = args.source.load()?;
    let problem = Problem::sat(&cnf)?;
    let p = &args.params;
    let epsilon = match p.epsilon {
        Some(e) => e,
        None => {
            let e = check_general_lll(&problem.instance, &problem.measure, &problem.psi)?.epsilon;
            if e <= 0.0 {
                return Err(CliError::Infeasible(format!("condition fails, epsilon = {e}")));
            }
            e
        }
    };
    let params = derive_params(&problem.instance, &problem.psi, epsilon)?;
    let mut config = LcaConfig::new(p.q, p.delta, epsilon).seed(p.seed, args.trial);
    config.r_override = p.radius;
    config.t_override = p.budget;
    let mut session = LcaSession::open_with_params(&problem.instance, &problem.measure, params, &config)?;
    let mut out = io::stdout().lock();
    writeln!(out, "radius={} budget={} epsilon={epsilon}", session.radius(), session.budget()).map_err(io_failure)?;
    for &x in &args.queries {
        if x == 0 || x > cnf.num_vars() {
            return Err(CliError::Usage(format!("variable {x} outside 1..={}", cnf.num_vars())));
        }
        let r = session.query(x - 1)?;
        let answer = match r.value() {
            Some(v) => (v == 1).to_string(),
            None => "abort".into(),
        };
        writeln!(out, "var={x} value={answer} resamples={} ball={} fresh={}", r.resamples, r.ball_size, r.fresh).map_err(io_failure)?;
        if r.value().is_none() {
            return Err(CliError::Failure("session aborted".into()));
        }
    }
    Ok(())
}

fn cmd_verify(args: &ExperimentArgs) -> Result<(), CliError> {
    let (cnf, source) = args.source.load()?;
    let problem = Problem::sat(&cnf)?;
    let config = experiment_config(source, Mode::Verify, args);
    let summary = run_experiment(&config, &problem, output(&args.out)?)?;
    if summary.trial_failures == summary.trials {
        return Err(CliError::Failure("every trial failed".into()));
    }
    Ok(())
}

fn cmd_sweep(args: &SweepArgs) -> Result<(), CliError> {
    if args.r_max <= args.r_min {
        return Err(CliError::Usage("--r-max must exceed --r-min".into()));
    }
    let e = &args.experiment;
    let (cnf, source) = e.source.load()?;
    let problem = Problem::sat(&cnf)?;
    let config = experiment_config(source, Mode::Verify, e);
    let radii: Vec<u32> = (args.r_min..=args.r_max).collect();
    run_sweep(&config, &problem, &radii, output(&e.out)?)?;
    Ok(())
}

fn cmd_witness(args: &WitnessArgs) -> Result<(), CliError> {
    let (cnf, _) = args.source.load()?;
    let problem = Problem::sat(&cnf)?;
    let mut rng = substream(args.seed, &[0]);
    let run = resample_full(&problem.instance, &problem.measure, &mut rng, args.max_steps);
    let w = run.witness_sequence();
    let mut out = io::stdout().lock();
    writeln!(out, "steps={} terminated={}", w.len(), run.terminated).map_err(io_failure)?;
    let steps: Vec<usize> = match args.step {
        Some(k) if k == 0 || k > w.len() => return Err(CliError::Usage(format!("step {k} outside 1..={}", w.len()))),
        Some(k) => vec![k],
        None => (1..=w.len()).collect(),
    };
    for k in steps {
        let tree = witness_tree(&problem.instance, &w, k).expect("step in range");
        writeln!(out, "step={k} constraint={} size={} tree={tree}", w[k - 1], tree.size()).map_err(io_failure)?;
    }
    Ok(())
}

fn cmd_gen(args: &GenArgs) -> Result<(), CliError> {
    let text = match args.kind {
        GenKind::Ksat => {
            let cnf = match args.m {
                Some(m) => gen_ksat_with_clauses(args.n, args.k, args.d, m, args.seed)?,
                None => gen_ksat(args.n, args.k, args.d, args.seed)?,
            };
            format!("c gen-ksat n={} k={} d={} seed={}\n{}", args.n, args.k, args.d, args.seed, write_dimacs(&cnf))
        }
        GenKind::Gnp => format!("# gnp n={} p={} seed={}\n{}", args.n, args.p, args.seed, write_graph(&gen_gnp(args.n, args.p, args.seed)?)),
        GenKind::Bipartite => {
            let g = gen_clustered_bipartite(args.n, args.side, args.p, args.seed)?;
            format!("# bipartite clusters={} side={} p={} seed={}\n{}", args.n, args.side, args.p, args.seed, write_graph(&g))
        }
        GenKind::Hypergraph => {
            let mut sizes = Vec::new();
            for spec in &args.edges {
                let parsed = spec.split_once(':').and_then(|(a, b)| Some((a.parse().ok()?, b.parse().ok()?)));
                sizes.push(parsed.ok_or_else(|| CliError::Usage(format!("bad --edges `{spec}`, expected size:count")))?);
            }
            format!("# hypergraph n={} seed={}\n{}", args.n, args.seed, write_hypergraph(&gen_hypergraph(args.n, &sizes, args.seed)?))
        }
    };
    output(&args.out)?.write_all(text.as_bytes()).map_err(io_failure)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    let result = match &cli.command {
        Command::Check(a) => cmd_check(a),
        Command::Solve(a) => cmd_solve(a),
        Command::Lca(a) => cmd_lca(a),
        Command::Verify(a) => cmd_verify(a),
        Command::Sweep(a) => cmd_sweep(a),
        Command::Witness(a) => cmd_witness(a),
        Command::Gen(a) => cmd_gen(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("lll: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
