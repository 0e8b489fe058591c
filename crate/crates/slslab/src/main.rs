//! Command-line front end.
//!
//! Subcommands mirror the pipeline stages: `gen`, `modify`, and `solve`
//! operate on single DIMACS files; `experiment` runs the whole chain from a
//! TOML configuration; `fit`, `bootstrap`, `restart-analyze`, and
//! `plot-data` re-run the analysis stages on saved tables.
//!
//! Exit codes: 0 on success, 2 for configuration or input errors, 3 when a
//! computation aborts (budget exhaustion, failed fit), 4 for I/O failures.

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use slslab::formula::{parse_dimacs, Formula};
use slslab::gen::{
    gen_hidden, gen_uniform_sat, ChanceVector, GenSpec, DEFAULT_NODE_BUDGET, DEFAULT_SAT_ATTEMPTS,
};
use slslab::harness::{
    emit_plot_data, inclusion_probability, run_experiment, ExperimentConfig, HarnessError,
};
use slslab::resolve::{res_w_closure, sample_resolvent_set, ClosureLimits, ModificationParams};
use slslab::restart::analyze_restarts;
use slslab::seedstream::{derive_seed, stream, DOMAIN_GEN, DOMAIN_MODIFY, DOMAIN_SOLVE};
use slslab::sls::{
    BreakFunction, ProbSatParams, SolveStatus, Solver, SrwaParams,
};
use slslab::stats::bootstrap::{bootstrap_test, FITTED_PARAMS};
use slslab::stats::fit::fit_lognormal3;
use slslab::stats::gof::chi_square_gof;
use slslab::stats::lognormal::Lognormal3;
use slslab::stats::{FitReport, Sample};

const WORKERS_ENV: &str = "SLSLAB_WORKERS";

#[derive(Parser)]
#[command(
    name = "slslab",
    version,
    about = "Hardness-distribution laboratory for stochastic local search SAT solvers"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a base instance and write it as DIMACS CNF
    Gen(GenArgs),
    /// Append implied resolvents sampled from a formula's closure pool
    Modify(ModifyArgs),
    /// Run one solver on one formula and report the flip count
    Solve(SolveArgs),
    /// Run a complete experiment from a TOML configuration
    Experiment(ExperimentArgs),
    /// Fit the hardness model to a sample and test the fit
    Fit(FitArgs),
    /// Calibrate the fit statistic by parametric bootstrap
    Bootstrap(BootstrapArgs),
    /// Search a fitted distribution for useful restart cutoffs
    RestartAnalyze(RestartAnalyzeArgs),
    /// Tabulate empirical and fitted curves for plotting
    PlotData(PlotDataArgs),
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum GenKind {
    /// Hidden-solution instance, satisfiable by construction
    Hidden,
    /// Uniform random instance, redrawn until satisfiable
    Uniform,
}

#[derive(Args)]
struct GenArgs {
    #[arg(long, value_enum, default_value = "hidden")]
    kind: GenKind,
    /// Number of variables
    #[arg(short = 'n', long)]
    n: usize,
    /// Number of clauses (hidden generation)
    #[arg(short = 'm', long, required_if_eq("kind", "hidden"))]
    m: Option<usize>,
    /// Clause-to-variable ratio (uniform generation)
    #[arg(long, required_if_eq("kind", "uniform"))]
    ratio: Option<f64>,
    /// Literals per clause
    #[arg(short = 'k', long, default_value_t = 3)]
    k: usize,
    /// Acceptance probabilities by agreement count, k+1 values
    #[arg(long, value_delimiter = ',')]
    chances: Option<Vec<f64>>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output file; stdout when omitted
    #[arg(short = 'o', long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ModifyArgs {
    /// Input DIMACS file
    #[arg(short = 'i', long)]
    input: PathBuf,
    /// Output file; stdout when omitted
    #[arg(short = 'o', long)]
    out: Option<PathBuf>,
    /// Resolvent width bound
    #[arg(short = 'w', long, default_value_t = 4)]
    width: u32,
    /// Expected appended clauses as a fraction of the base clause count
    #[arg(long, default_value_t = 0.1, conflicts_with = "p")]
    fraction: f64,
    /// Explicit inclusion probability, bypassing calibration
    #[arg(long)]
    p: Option<f64>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Instance index within the seed stream
    #[arg(long, default_value_t = 0)]
    index: u64,
    /// Shuffle the sampled clauses before appending
    #[arg(long)]
    shuffle: bool,
    /// Closure safety limit
    #[arg(long)]
    max_closure_clauses: Option<usize>,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum SolverKind {
    Srwa,
    Probsat,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum BreakKind {
    Polynomial,
    Exponential,
}

#[derive(Args)]
struct SolveArgs {
    /// Input DIMACS file
    #[arg(short = 'i', long)]
    input: PathBuf,
    #[arg(long, value_enum, default_value = "srwa")]
    solver: SolverKind,
    /// Re-draw the assignment every factor * n flips; 0 disables
    #[arg(long, default_value_t = 3)]
    walk_period_factor: u32,
    /// Break-weight exponent
    #[arg(long, default_value_t = 2.3)]
    cb: f64,
    /// Break-weight offset for the polynomial form
    #[arg(long, default_value_t = 0.9)]
    eps: f64,
    #[arg(long, value_enum, default_value = "polynomial")]
    break_function: BreakKind,
    #[arg(long, default_value_t = 10_000_000_000)]
    max_flips: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Include the satisfying assignment in the report
    #[arg(long)]
    model: bool,
}

#[derive(Args)]
struct ExperimentArgs {
    /// TOML experiment configuration
    #[arg(short = 'c', long)]
    config: PathBuf,
    /// Override the configured output directory
    #[arg(long)]
    output_dir: Option<PathBuf>,
    /// Override the worker count (also settable via SLSLAB_WORKERS)
    #[arg(long)]
    workers: Option<usize>,
}

#[derive(Args)]
struct DataArgs {
    /// Sample file: a CSV with a header or whitespace-separated numbers
    #[arg(long)]
    data: PathBuf,
    /// Column to read when the file is a CSV
    #[arg(long, default_value = "mean_flips")]
    column: String,
}

#[derive(Args)]
struct FitArgs {
    #[command(flatten)]
    data: DataArgs,
    /// Output file; stdout when omitted
    #[arg(short = 'o', long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct BootstrapArgs {
    #[command(flatten)]
    data: DataArgs,
    /// Variance column holding per-point run variances
    #[arg(long, default_value = "run_variance")]
    variance_column: String,
    /// Runs behind each sample point; with the variance column present,
    /// enables per-point noise scales
    #[arg(long)]
    runs: Option<usize>,
    #[arg(long, default_value_t = 1000)]
    rounds: usize,
    #[arg(long, default_value_t = 0.05)]
    alpha: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output file; stdout when omitted
    #[arg(short = 'o', long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct RestartAnalyzeArgs {
    /// Fit report to take the distribution from
    #[arg(long, conflicts_with_all = ["mu", "sigma", "gamma"])]
    fit: Option<PathBuf>,
    #[arg(long, requires = "sigma")]
    mu: Option<f64>,
    #[arg(long, requires = "mu")]
    sigma: Option<f64>,
    #[arg(long, default_value_t = 0.0)]
    gamma: f64,
    /// Output file; stdout when omitted
    #[arg(short = 'o', long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct PlotDataArgs {
    #[command(flatten)]
    data: DataArgs,
    /// Fit report to take the distribution from
    #[arg(long)]
    fit: PathBuf,
    /// Directory for the plot tables
    #[arg(long)]
    out_dir: PathBuf,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

fn run(command: Command) -> Result<ExitCode, HarnessError> {
    match command {
        Command::Gen(args) => cmd_gen(args),
        Command::Modify(args) => cmd_modify(args),
        Command::Solve(args) => cmd_solve(args),
        Command::Experiment(args) => cmd_experiment(args),
        Command::Fit(args) => cmd_fit(args),
        Command::Bootstrap(args) => cmd_bootstrap(args),
        Command::RestartAnalyze(args) => cmd_restart_analyze(args),
        Command::PlotData(args) => cmd_plot_data(args),
    }
}

fn config_error(msg: impl Into<String>) -> HarnessError {
    HarnessError::Config(msg.into())
}

fn write_text(out: Option<&Path>, text: &str) -> Result<(), HarnessError> {
    match out {
        Some(path) => fs::write(path, text)?,
        None => {
            std::io::stdout().write_all(text.as_bytes())?;
        }
    }
    Ok(())
}

fn write_json<T: Serialize>(out: Option<&Path>, value: &T) -> Result<(), HarnessError> {
    let mut text = serde_json::to_string_pretty(value).expect("report serializes");
    text.push('\n');
    write_text(out, &text)
}

fn read_formula(path: &Path) -> Result<Formula, HarnessError> {
    let parsed = parse_dimacs(&fs::read_to_string(path)?)?;
    for warning in &parsed.warnings {
        eprintln!("warning: {}: {warning}", path.display());
    }
    Ok(parsed.formula)
}

/// Reads a numeric column: CSV files are recognized by a non-numeric first
/// line and read by header name; anything else is parsed as
/// whitespace-separated numbers.
fn read_column(path: &Path, column: &str) -> Result<Vec<f64>, HarnessError> {
    let text = fs::read_to_string(path)?;
    let mut lines = text.lines();
    let Some(first) = lines.next() else {
        return Err(config_error(format!("{}: empty file", path.display())));
    };
    let is_header = first
        .split(',')
        .any(|field| field.trim().parse::<f64>().is_err());
    if !is_header {
        return text
            .split_whitespace()
            .flat_map(|token| token.split(','))
            .filter(|token| !token.is_empty())
            .map(|token| {
                token
                    .parse::<f64>()
                    .map_err(|_| config_error(format!("{}: bad number {token:?}", path.display())))
            })
            .collect();
    }
    let index = first
        .split(',')
        .position(|field| field.trim() == column)
        .ok_or_else(|| {
            config_error(format!("{}: no column named {column:?}", path.display()))
        })?;
    lines
        .enumerate()
        .map(|(row, line)| {
            let field = line.split(',').nth(index).ok_or_else(|| {
                config_error(format!("{}: row {} is missing column {column:?}", path.display(), row + 2))
            })?;
            field.trim().parse::<f64>().map_err(|_| {
                config_error(format!("{}: bad number {field:?} in row {}", path.display(), row + 2))
            })
        })
        .collect()
}

fn load_fitted_dist(path: &Path) -> Result<Lognormal3, HarnessError> {
    let report: FitReport = serde_json::from_str(&fs::read_to_string(path)?)
        .map_err(|e| config_error(format!("{}: {e}", path.display())))?;
    Ok(Lognormal3::new(report.mu, report.sigma, report.gamma)?)
}

fn cmd_gen(args: GenArgs) -> Result<ExitCode, HarnessError> {
    let mut rng = stream(args.seed, DOMAIN_GEN, 0, 0);
    let formula = match args.kind {
        GenKind::Hidden => {
            let m = args.m.expect("clap enforces m for hidden generation");
            let spec = GenSpec {
                n: args.n,
                m,
                k: args.k,
                seed: derive_seed(args.seed, DOMAIN_GEN, 0, 0),
            };
            let chances = match args.chances {
                Some(probs) => {
                    ChanceVector::new(probs, args.k).map_err(|e| config_error(e.to_string()))?
                }
                None if args.k == 3 => ChanceVector::default_k3(),
                None => {
                    return Err(config_error(
                        "generation with k != 3 requires --chances with k+1 values",
                    ));
                }
            };
            gen_hidden(&spec, &chances, &mut rng)?.0
        }
        GenKind::Uniform => {
            let ratio = args.ratio.expect("clap enforces ratio for uniform generation");
            gen_uniform_sat(
                args.n,
                ratio,
                args.k,
                &mut rng,
                DEFAULT_SAT_ATTEMPTS,
                DEFAULT_NODE_BUDGET,
            )?
        }
    };
    write_text(args.out.as_deref(), &formula.to_dimacs())?;
    eprintln!(
        "generated n={} m={} k={}",
        formula.num_vars(),
        formula.len(),
        args.k
    );
    Ok(ExitCode::SUCCESS)
}

fn cmd_modify(args: ModifyArgs) -> Result<ExitCode, HarnessError> {
    let formula = read_formula(&args.input)?;
    let limits = match args.max_closure_clauses {
        Some(max_clauses) => ClosureLimits { max_clauses },
        None => ClosureLimits::default(),
    };
    let pool = res_w_closure(&formula, args.width, &limits)?;
    let p = match args.p {
        Some(p) => {
            if !(p > 0.0 && p <= 1.0) {
                return Err(config_error(format!("--p {p} outside (0, 1]")));
            }
            p
        }
        None => {
            if !(args.fraction > 0.0) || !args.fraction.is_finite() {
                return Err(config_error(format!(
                    "--fraction {} must be positive and finite",
                    args.fraction
                )));
            }
            inclusion_probability(formula.len(), pool.len(), args.fraction)
        }
    };
    let params = ModificationParams {
        width: args.width,
        p,
        shuffle: args.shuffle,
        seed: derive_seed(args.seed, DOMAIN_MODIFY, args.index, 0),
    };
    let mut rng = stream(args.seed, DOMAIN_MODIFY, args.index, 0);
    let extra = sample_resolvent_set(&pool, &params, &mut rng)?;
    let added = extra.len();
    let modified = formula.with_added_clauses(extra).map_err(|e| {
        HarnessError::Resolve(slslab::resolve::ResolveError::Formula(e))
    })?;
    write_text(args.out.as_deref(), &modified.to_dimacs())?;
    eprintln!(
        "pool {} clauses at width {}, p = {p:.6}, appended {added}",
        pool.len(),
        args.width
    );
    Ok(ExitCode::SUCCESS)
}

#[derive(Serialize)]
struct SolveReport {
    status: SolveStatus,
    flips: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    assignment: Option<Vec<i64>>,
}

fn cmd_solve(args: SolveArgs) -> Result<ExitCode, HarnessError> {
    let formula = read_formula(&args.input)?;
    let solver = match args.solver {
        SolverKind::Srwa => Solver::Srwa(SrwaParams {
            walk_period_factor: args.walk_period_factor,
        }),
        SolverKind::Probsat => Solver::ProbSat(ProbSatParams {
            cb: args.cb,
            eps: args.eps,
            function: match args.break_function {
                BreakKind::Polynomial => BreakFunction::Polynomial,
                BreakKind::Exponential => BreakFunction::Exponential,
            },
        }),
    };
    solver.validate()?;
    let mut rng = stream(args.seed, DOMAIN_SOLVE, 0, 0);
    let outcome = solver.solve(&formula, args.max_flips, &mut rng);
    let report = SolveReport {
        status: outcome.status,
        flips: outcome.flips,
        assignment: outcome.assignment.filter(|_| args.model).map(|a| {
            a.values()
                .iter()
                .enumerate()
                .map(|(i, &v)| if v { i as i64 + 1 } else { -(i as i64 + 1) })
                .collect()
        }),
    };
    write_json(None, &report)?;
    Ok(match outcome.status {
        SolveStatus::Solved => ExitCode::SUCCESS,
        SolveStatus::BudgetExhausted => ExitCode::from(3),
    })
}

fn cmd_experiment(args: ExperimentArgs) -> Result<ExitCode, HarnessError> {
    let mut config = ExperimentConfig::load(&args.config)?;
    if let Some(dir) = args.output_dir {
        config.output_dir = dir;
    }
    if let Some(workers) = args.workers {
        config.workers = Some(workers);
    }
    if config.workers.is_none() {
        if let Ok(value) = std::env::var(WORKERS_ENV) {
            let parsed = value
                .parse::<usize>()
                .map_err(|_| config_error(format!("{WORKERS_ENV}={value:?} is not a number")))?;
            config.workers = Some(parsed);
        }
    }
    let result = run_experiment(&config)?;
    result.write_outputs(&config.output_dir)?;
    for warning in &result.manifest.warnings {
        eprintln!("warning: {warning}");
    }
    let report = &result.fit_report;
    let verdict = report
        .bootstrap
        .as_ref()
        .map_or("none", |b| match b.verdict {
            slslab::stats::Verdict::Accept => "accept",
            slslab::stats::Verdict::Reject => "reject",
        });
    println!(
        "wrote {}: M={} N={} total_flips={} mu={:.4} sigma={:.4} gamma={:.4} chi2_p={:.4} bootstrap={} restarts_useful={}",
        config.output_dir.display(),
        config.instances,
        config.runs_per_instance,
        result.manifest.total_flips,
        report.mu,
        report.sigma,
        report.gamma,
        report.chi2.p,
        verdict,
        result.restart_analysis.useful,
    );
    Ok(ExitCode::SUCCESS)
}

fn cmd_fit(args: FitArgs) -> Result<ExitCode, HarnessError> {
    let values = read_column(&args.data.data, &args.data.column)?;
    let fit = fit_lognormal3(&values)?;
    let gof = chi_square_gof(&values, &fit.dist, FITTED_PARAMS)?;
    let report = FitReport::assemble(values.len(), &fit, &gof, None);
    write_json(args.out.as_deref(), &report)?;
    Ok(ExitCode::SUCCESS)
}

fn cmd_bootstrap(args: BootstrapArgs) -> Result<ExitCode, HarnessError> {
    let values = read_column(&args.data.data, &args.data.column)?;
    let sample = match args.runs {
        Some(runs) if runs == 0 => {
            return Err(config_error("--runs must be at least 1"));
        }
        Some(runs) => {
            let variances = read_column(&args.data.data, &args.variance_column)?;
            let mean_variances = variances.iter().map(|v| v / runs as f64).collect();
            Sample::with_mean_variances(values, mean_variances)?
        }
        None => Sample::new(values)?,
    };
    let outcome = bootstrap_test(&sample, args.rounds, args.alpha, args.seed)?;
    let report = FitReport::assemble(
        sample.len(),
        &outcome.fit,
        &outcome.gof,
        Some(&outcome.report),
    );
    write_json(args.out.as_deref(), &report)?;
    Ok(ExitCode::SUCCESS)
}

fn cmd_restart_analyze(args: RestartAnalyzeArgs) -> Result<ExitCode, HarnessError> {
    let dist = match (args.fit, args.mu, args.sigma) {
        (Some(path), None, None) => load_fitted_dist(&path)?,
        (None, Some(mu), Some(sigma)) => Lognormal3::new(mu, sigma, args.gamma)?,
        _ => {
            return Err(config_error(
                "provide either --fit or both --mu and --sigma",
            ));
        }
    };
    let analysis = analyze_restarts(&dist);
    write_json(args.out.as_deref(), &analysis)?;
    Ok(ExitCode::SUCCESS)
}

fn cmd_plot_data(args: PlotDataArgs) -> Result<ExitCode, HarnessError> {
    let values = read_column(&args.data.data, &args.data.column)?;
    let dist = load_fitted_dist(&args.fit)?;
    let written = emit_plot_data(&values, &dist, &args.out_dir)?;
    for path in written {
        println!("{}", path.display());
    }
    Ok(ExitCode::SUCCESS)
}
