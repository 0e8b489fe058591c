//! Experiment orchestration: one base instance, `M` randomized variants,
//! `N` solver runs per variant, then the whole analysis chain — hardness
//! aggregation, distribution fitting, goodness-of-fit with bootstrap
//! calibration, restart analysis — and flat-file persistence.
//!
//! Every random decision draws from a stream keyed by `(base_seed, domain,
//! index...)`, so a configuration fully determines every table byte
//! regardless of worker count or scheduling. The only outputs that vary
//! between repeat runs are the wall-clock time and worker count recorded in
//! the manifest.
//!
//! Runs that exhaust the flip budget abort the experiment with an error
//! naming the failing `(instance, run)` pair: a censored hardness value
//! would silently bias every downstream statistic, so the default budget is
//! set high enough that exhaustion means the configuration, not the run, is
//! wrong.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::fmt::Write as _;
use std::fs;
use std::io::{BufWriter, Write as _};
use std::path::{Path, PathBuf};
use std::time::Instant;
use thiserror::Error;

use crate::formula::{Formula, ParseError};
use crate::gen::{
    dpll_sat, gen_hidden, gen_uniform_sat, ChanceVector, GenError, GenSpec, DEFAULT_NODE_BUDGET,
    DEFAULT_SAT_ATTEMPTS,
};
use crate::resolve::{
    res_w_closure, sample_resolvent_set, ClosureLimits, ModificationParams, ResolveError,
};
use crate::restart::{analyze_restarts, RestartAnalysis};
use crate::seedstream::{derive_seed, stream, DOMAIN_GEN, DOMAIN_MODIFY, DOMAIN_SOLVE};
use crate::sls::{SolveStatus, Solver, SolverConfigError};
use crate::stats::bootstrap::bootstrap_test;
use crate::stats::lognormal::Lognormal3;
use crate::stats::plot::{
    distribution_table, write_cdf_csv, write_survival_csv, GridKind, DEFAULT_GRID_POINTS,
};
use crate::stats::{FitReport, Sample, StatsError};

/// Bumped whenever the layout of the output files changes.
pub const FORMAT_VERSION: u32 = 1;

pub const RUNS_CSV_HEADER: &str = "instance_index,run_index,seed,flips,status";
pub const HARDNESS_CSV_HEADER: &str = "instance_index,mean_flips,run_variance";

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("configuration: {0}")]
    Config(String),
    #[error("base instance: {0}")]
    BadBaseFile(#[from] ParseError),
    #[error("base instance is unsatisfiable")]
    UnsatBase,
    #[error("run ({instance_index}, {run_index}) exhausted the {max_flips}-flip budget")]
    RunBudgetExhausted {
        instance_index: usize,
        run_index: usize,
        max_flips: u64,
    },
    #[error(transparent)]
    Solver(#[from] SolverConfigError),
    #[error(transparent)]
    Gen(#[from] GenError),
    #[error(transparent)]
    Resolve(#[from] ResolveError),
    #[error(transparent)]
    Stats(#[from] StatsError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl HarnessError {
    /// Process exit code for this failure class: 2 for configuration and
    /// input problems, 3 for aborted computations, 4 for filesystem errors.
    pub fn exit_code(&self) -> u8 {
        match self {
            HarnessError::Config(_)
            | HarnessError::BadBaseFile(_)
            | HarnessError::UnsatBase
            | HarnessError::Solver(_) => 2,
            HarnessError::RunBudgetExhausted { .. }
            | HarnessError::Gen(_)
            | HarnessError::Resolve(_)
            | HarnessError::Stats(_) => 3,
            HarnessError::Io(_) => 4,
        }
    }
}

fn default_width() -> u32 {
    4
}
fn default_fraction() -> f64 {
    0.1
}
fn default_instances() -> usize {
    200
}
fn default_runs() -> usize {
    25
}
fn default_max_flips() -> u64 {
    10_000_000_000
}
fn default_bootstrap_rounds() -> usize {
    1000
}
fn default_alpha() -> f64 {
    0.05
}
fn default_k() -> usize {
    3
}

/// Where the base formula comes from: a DIMACS file or a generator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum BaseInstance {
    /// DIMACS CNF file; satisfiability is certified by a complete search.
    File { path: PathBuf },
    /// Hidden-solution generation; satisfiable by construction.
    Hidden {
        n: usize,
        m: usize,
        #[serde(default = "default_k")]
        k: usize,
        /// Acceptance probabilities by agreement count; defaults to the
        /// built-in profile for `k = 3`.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        chances: Option<ChanceVector>,
    },
    /// Uniform random instances redrawn until one is satisfiable.
    Uniform {
        n: usize,
        ratio: f64,
        #[serde(default = "default_k")]
        k: usize,
    },
}

/// Complete description of one experiment; the TOML configuration file is
/// this structure verbatim.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub base_instance: BaseInstance,
    pub solver: Solver,
    /// Resolvent width bound for the modification pool.
    #[serde(default = "default_width")]
    pub w: u32,
    /// Expected number of appended resolvents, as a fraction of the base
    /// clause count.
    #[serde(default = "default_fraction")]
    pub resolvent_budget_fraction: f64,
    /// Number of modified instances.
    #[serde(rename = "M", default = "default_instances")]
    pub instances: usize,
    /// Solver runs per instance.
    #[serde(rename = "N", default = "default_runs")]
    pub runs_per_instance: usize,
    #[serde(default)]
    pub base_seed: u64,
    /// Per-run flip budget; exhausting it aborts the experiment.
    #[serde(default = "default_max_flips")]
    pub max_flips: u64,
    pub output_dir: PathBuf,
    /// Worker thread count; defaults to the machine's parallelism.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub workers: Option<usize>,
    #[serde(default = "default_bootstrap_rounds")]
    pub bootstrap_rounds: usize,
    /// Significance level shared by the goodness-of-fit decisions.
    #[serde(default = "default_alpha")]
    pub alpha: f64,
    /// Shuffle each sampled resolvent set before appending it.
    #[serde(default)]
    pub shuffle: bool,
    /// Override for the closure safety limit.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_closure_clauses: Option<usize>,
}

impl ExperimentConfig {
    pub fn from_toml_str(text: &str) -> Result<ExperimentConfig, HarnessError> {
        let config: ExperimentConfig =
            toml::from_str(text).map_err(|e| HarnessError::Config(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: &Path) -> Result<ExperimentConfig, HarnessError> {
        ExperimentConfig::from_toml_str(&fs::read_to_string(path)?)
    }

    pub fn validate(&self) -> Result<(), HarnessError> {
        let bad = |msg: String| Err(HarnessError::Config(msg));
        if self.instances == 0 {
            return bad("M must be at least 1".into());
        }
        if self.runs_per_instance == 0 {
            return bad("N must be at least 1".into());
        }
        if !(self.resolvent_budget_fraction > 0.0) || !self.resolvent_budget_fraction.is_finite() {
            return bad(format!(
                "resolvent_budget_fraction must be positive and finite, got {}",
                self.resolvent_budget_fraction
            ));
        }
        if self.w == 0 {
            return bad("w must be at least 1".into());
        }
        if self.max_flips == 0 {
            return bad("max_flips must be at least 1".into());
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return bad(format!("alpha must lie in (0, 1), got {}", self.alpha));
        }
        self.solver.validate()?;
        match &self.base_instance {
            BaseInstance::File { .. } => {}
            BaseInstance::Hidden { n, m, k, chances } => {
                let spec = GenSpec { n: *n, m: *m, k: *k, seed: 0 };
                spec.validate().map_err(|e| HarnessError::Config(e.to_string()))?;
                match chances {
                    Some(cv) if cv.k() != *k => {
                        return bad(format!(
                            "chances vector has {} entries but k = {k} needs {}",
                            cv.probs().len(),
                            k + 1
                        ));
                    }
                    None if *k != 3 => {
                        return bad(
                            "hidden generation with k != 3 requires an explicit chances vector"
                                .into(),
                        );
                    }
                    _ => {}
                }
            }
            BaseInstance::Uniform { n, ratio, k } => {
                if !(ratio > &0.0) || !ratio.is_finite() {
                    return bad(format!("ratio must be positive and finite, got {ratio}"));
                }
                let m = (ratio * *n as f64).round() as usize;
                let spec = GenSpec { n: *n, m, k: *k, seed: 0 };
                spec.validate().map_err(|e| HarnessError::Config(e.to_string()))?;
            }
        }
        Ok(())
    }

    pub fn closure_limits(&self) -> ClosureLimits {
        match self.max_closure_clauses {
            Some(max_clauses) => ClosureLimits { max_clauses },
            None => ClosureLimits::default(),
        }
    }
}

/// Pool-clause inclusion probability making the expected number of appended
/// resolvents `fraction * base_clauses`, capped at 1. An empty pool
/// calibrates to 1; sampling from it adds nothing.
pub fn inclusion_probability(base_clauses: usize, pool_size: usize, fraction: f64) -> f64 {
    if pool_size == 0 {
        return 1.0;
    }
    (fraction * base_clauses as f64 / pool_size as f64).min(1.0)
}

/// Computes the bounded-width resolution pool of `f` and calibrates the
/// inclusion probability so the expected number of appended clauses is
/// `fraction * |f|`.
pub fn calibrate_p(f: &Formula, width: u32, fraction: f64) -> Result<f64, HarnessError> {
    if !(fraction > 0.0) || !fraction.is_finite() {
        return Err(HarnessError::Config(format!(
            "resolvent budget fraction must be positive and finite, got {fraction}"
        )));
    }
    let pool = res_w_closure(f, width, &ClosureLimits::default())?;
    Ok(inclusion_probability(f.len(), pool.len(), fraction))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RunRecord {
    pub instance_index: usize,
    pub run_index: usize,
    pub seed: u64,
    pub flips: u64,
    pub status: SolveStatus,
}

/// One point of the hardness sample: an instance and the mean flip count
/// over its runs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HardnessPoint {
    pub instance_index: usize,
    pub mean_flips: f64,
    /// Sample variance of the instance's per-run flip counts.
    pub run_variance: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub config: ExperimentConfig,
    pub crate_version: String,
    pub format_version: u32,
    pub workers: usize,
    pub pool_size: usize,
    /// Calibrated pool-clause inclusion probability.
    pub inclusion_p: f64,
    pub wall_clock_seconds: f64,
    pub total_flips: u64,
    pub warnings: Vec<String>,
}

#[derive(Debug, Clone)]
pub struct ExperimentResult {
    pub runs: Vec<RunRecord>,
    pub hardness: Vec<HardnessPoint>,
    pub fit_report: FitReport,
    /// The fitted distribution behind `fit_report`, for further analysis.
    pub fitted: Lognormal3,
    pub restart_analysis: RestartAnalysis,
    pub manifest: Manifest,
}

fn realize_base(config: &ExperimentConfig) -> Result<(Formula, Vec<String>), HarnessError> {
    let mut rng = stream(config.base_seed, DOMAIN_GEN, 0, 0);
    match &config.base_instance {
        BaseInstance::File { path } => {
            let parsed = crate::formula::parse_dimacs(&fs::read_to_string(path)?)?;
            let warnings = parsed
                .warnings
                .iter()
                .map(|w| format!("{}: {w}", path.display()))
                .collect();
            if !dpll_sat(&parsed.formula, DEFAULT_NODE_BUDGET)? {
                return Err(HarnessError::UnsatBase);
            }
            Ok((parsed.formula, warnings))
        }
        BaseInstance::Hidden { n, m, k, chances } => {
            let spec = GenSpec {
                n: *n,
                m: *m,
                k: *k,
                seed: derive_seed(config.base_seed, DOMAIN_GEN, 0, 0),
            };
            let chances = match chances {
                Some(cv) => cv.clone(),
                None => ChanceVector::default_k3(),
            };
            // Satisfiable by construction: the planted assignment is a model.
            let (formula, _planted) = gen_hidden(&spec, &chances, &mut rng)?;
            Ok((formula, Vec::new()))
        }
        BaseInstance::Uniform { n, ratio, k } => {
            let formula = gen_uniform_sat(
                *n,
                *ratio,
                *k,
                &mut rng,
                DEFAULT_SAT_ATTEMPTS,
                DEFAULT_NODE_BUDGET,
            )?;
            Ok((formula, Vec::new()))
        }
    }
}

/// Runs the full pipeline described by `config` and returns everything in
/// memory; nothing is written to disk.
pub fn run_experiment(config: &ExperimentConfig) -> Result<ExperimentResult, HarnessError> {
    config.validate()?;
    let started = Instant::now();

    let (base, mut warnings) = realize_base(config)?;
    let pool = res_w_closure(&base, config.w, &config.closure_limits())?;
    let p = inclusion_probability(base.len(), pool.len(), config.resolvent_budget_fraction);
    if pool.is_empty() {
        warnings.push("resolvent pool is empty; instances are copies of the base".into());
    }

    let workers = config.workers.unwrap_or_else(|| {
        std::thread::available_parallelism().map_or(1, |n| n.get())
    });
    let thread_pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| HarnessError::Config(format!("worker pool: {e}")))?;

    let m = config.instances;
    let n_runs = config.runs_per_instance;

    let instances: Vec<Formula> = thread_pool.install(|| {
        (0..m)
            .into_par_iter()
            .map(|i| {
                let params = ModificationParams {
                    width: config.w,
                    p,
                    shuffle: config.shuffle,
                    seed: derive_seed(config.base_seed, DOMAIN_MODIFY, i as u64, 0),
                };
                let mut rng = stream(config.base_seed, DOMAIN_MODIFY, i as u64, 0);
                let extra = sample_resolvent_set(&pool, &params, &mut rng)?;
                Ok(base.with_added_clauses(extra).map_err(ResolveError::from)?)
            })
            .collect::<Result<Vec<_>, ResolveError>>()
    })?;

    let solver = config.solver;
    let runs: Vec<RunRecord> = thread_pool.install(|| {
        (0..m * n_runs)
            .into_par_iter()
            .map(|index| {
                let (i, j) = (index / n_runs, index % n_runs);
                let mut rng = stream(config.base_seed, DOMAIN_SOLVE, i as u64, j as u64);
                let outcome = solver.solve(&instances[i], config.max_flips, &mut rng);
                match outcome.status {
                    SolveStatus::Solved => Ok(RunRecord {
                        instance_index: i,
                        run_index: j,
                        seed: derive_seed(config.base_seed, DOMAIN_SOLVE, i as u64, j as u64),
                        flips: outcome.flips,
                        status: outcome.status,
                    }),
                    SolveStatus::BudgetExhausted => Err(HarnessError::RunBudgetExhausted {
                        instance_index: i,
                        run_index: j,
                        max_flips: config.max_flips,
                    }),
                }
            })
            .collect::<Result<Vec<_>, HarnessError>>()
    })?;

    // Aggregation is sequential so the floating-point reduction order never
    // depends on scheduling.
    let mut hardness = Vec::with_capacity(m);
    for i in 0..m {
        let slice = &runs[i * n_runs..(i + 1) * n_runs];
        let mean = slice.iter().map(|r| r.flips as f64).sum::<f64>() / n_runs as f64;
        let run_variance = if n_runs > 1 {
            slice
                .iter()
                .map(|r| {
                    let d = r.flips as f64 - mean;
                    d * d
                })
                .sum::<f64>()
                / (n_runs - 1) as f64
        } else {
            0.0
        };
        hardness.push(HardnessPoint {
            instance_index: i,
            mean_flips: mean,
            run_variance,
        });
    }
    let total_flips = runs.iter().map(|r| r.flips).sum();

    // Each hardness value is a mean of N runs, so its sampling variance is
    // the run variance over N; the bootstrap uses it as the noise scale.
    let sample = Sample::with_mean_variances(
        hardness.iter().map(|h| h.mean_flips).collect(),
        hardness
            .iter()
            .map(|h| h.run_variance / n_runs as f64)
            .collect(),
    )?;
    let outcome = thread_pool.install(|| {
        bootstrap_test(&sample, config.bootstrap_rounds, config.alpha, config.base_seed)
    })?;
    let fit_report =
        FitReport::assemble(sample.len(), &outcome.fit, &outcome.gof, Some(&outcome.report));
    let fitted = outcome.fit.dist;
    let restart_analysis = analyze_restarts(&fitted);

    Ok(ExperimentResult {
        runs,
        hardness,
        fit_report,
        fitted,
        restart_analysis,
        manifest: Manifest {
            config: config.clone(),
            crate_version: env!("CARGO_PKG_VERSION").to_string(),
            format_version: FORMAT_VERSION,
            workers,
            pool_size: pool.len(),
            inclusion_p: p,
            wall_clock_seconds: started.elapsed().as_secs_f64(),
            total_flips,
            warnings,
        },
    })
}

/// Writes the three plot tables for `values` against a fitted model:
/// the cumulative curve on a linear grid, and the cumulative and survival
/// curves on a geometric grid for log-log axes. Returns the written paths.
pub fn emit_plot_data(
    values: &[f64],
    dist: &Lognormal3,
    dir: &Path,
) -> Result<Vec<PathBuf>, HarnessError> {
    fs::create_dir_all(dir)?;
    let linear = distribution_table(values, dist, GridKind::Linear, DEFAULT_GRID_POINTS)?;
    let log = distribution_table(values, dist, GridKind::Log, DEFAULT_GRID_POINTS)?;
    let mut written = Vec::new();
    let mut emit = |name: &str,
                    write: &dyn Fn(&mut dyn std::io::Write) -> std::io::Result<()>|
     -> Result<(), HarnessError> {
        let path = dir.join(name);
        let mut out = BufWriter::new(fs::File::create(&path)?);
        write(&mut out)?;
        out.flush()?;
        written.push(path);
        Ok(())
    };
    emit("cdf_linear.csv", &|out| write_cdf_csv(&linear, out))?;
    emit("cdf_loglog.csv", &|out| write_cdf_csv(&log, out))?;
    emit("survival_loglog.csv", &|out| write_survival_csv(&log, out))?;
    Ok(written)
}

impl ExperimentResult {
    /// Persists every table and report into `dir`: `runs.csv`,
    /// `hardness.csv`, `fit.json`, `restart.json`, `manifest.json`, and the
    /// plot tables under `plots/`.
    pub fn write_outputs(&self, dir: &Path) -> Result<(), HarnessError> {
        fs::create_dir_all(dir)?;

        let mut runs = String::with_capacity(32 * (self.runs.len() + 1));
        runs.push_str(RUNS_CSV_HEADER);
        runs.push('\n');
        for r in &self.runs {
            // Infallible: writing to a String cannot fail.
            let _ = writeln!(
                runs,
                "{},{},{},{},{}",
                r.instance_index,
                r.run_index,
                r.seed,
                r.flips,
                r.status.as_str()
            );
        }
        fs::write(dir.join("runs.csv"), runs)?;

        let mut hardness = String::with_capacity(32 * (self.hardness.len() + 1));
        hardness.push_str(HARDNESS_CSV_HEADER);
        hardness.push('\n');
        for h in &self.hardness {
            let _ = writeln!(
                hardness,
                "{},{},{}",
                h.instance_index, h.mean_flips, h.run_variance
            );
        }
        fs::write(dir.join("hardness.csv"), hardness)?;

        let json = |value: String| {
            let mut text = value;
            text.push('\n');
            text
        };
        fs::write(
            dir.join("fit.json"),
            json(serde_json::to_string_pretty(&self.fit_report).expect("report serializes")),
        )?;
        fs::write(
            dir.join("restart.json"),
            json(
                serde_json::to_string_pretty(&self.restart_analysis)
                    .expect("analysis serializes"),
            ),
        )?;
        fs::write(
            dir.join("manifest.json"),
            json(serde_json::to_string_pretty(&self.manifest).expect("manifest serializes")),
        )?;

        let values: Vec<f64> = self.hardness.iter().map(|h| h.mean_flips).collect();
        emit_plot_data(&values, &self.fitted, &dir.join("plots"))?;
        Ok(())
    }
}
