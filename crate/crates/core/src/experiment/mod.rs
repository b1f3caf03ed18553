//! Seeded Monte-Carlo sweeps behind the command-line tool.
//!
//! Trial `t` uses seed `seed_base + t` at every SNR and for every method, so
//! methods are compared on identical instances. Work is spread over a rayon
//! pool but results are always merged in (SNR, trial, method) order, which
//! keeps every artifact except the timing columns reproducible.
//!
//! Layout under `<output_dir>/<scenario>/`:
//!
//! ```text
//! config.toml              effective configuration
//! trials.csv               all methods, one row per (method, snr, trial)
//! aggregate.csv            quartiles / means per (method, snr)
//! <method>/trials.csv      the same rows restricted to one method
//! <method>/aggregate.csv
//! <method>/traces/snr<snr>_trial<t>.jsonl
//! ```
//!
//! The `doa` command additionally writes `<method>/power_seed<seed>.csv`
//! (grid index, u, row power) and `leakage.csv`.

mod config;

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::Serialize;

pub use config::{ExperimentConfig, Method, NoiseChoice, Scenario};

use crate::error::{Error, Result};
use crate::linalg;
use crate::matrix_io;
use crate::metrics::{self, DEFAULT_DELTA};
use crate::model::ProblemInstance;
use crate::scenarios::DoaSpec;
use crate::solver::{self, JsonLinesSink, NoiseMode, RecoveryResult, SolverConfig, TraceRecord, TraceSink};

/// Column order of `trials.csv`.
pub const TRIAL_COLUMNS: [&str; 9] = [
    "method",
    "snr_db",
    "trial",
    "nse",
    "f1",
    "wall_time_s",
    "lambda_rel_error",
    "converged",
    "outer_iters",
];

/// Everything measured for one method on one instance.
#[derive(Debug, Clone, PartialEq)]
pub struct TrialRecord {
    pub method: Method,
    pub snr_db: f64,
    pub trial: usize,
    pub seed: u64,
    pub true_support: Vec<usize>,
    pub true_noise_variance: f64,
    pub outcome: std::result::Result<TrialResult, String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrialResult {
    pub nse: f64,
    pub support: metrics::SupportScore,
    pub lambda_hat: f64,
    pub wall_time_s: f64,
    pub converged: bool,
    pub outer_iters: usize,
    pub row_power: Vec<f64>,
    pub leakage_fraction: f64,
    pub trace: Vec<TraceRecord>,
}

impl TrialRecord {
    /// `|lambda_hat - lambda| / lambda`, undefined for noiseless instances.
    pub fn lambda_rel_error(&self) -> Option<f64> {
        let r = self.outcome.as_ref().ok()?;
        (self.true_noise_variance > 0.0)
            .then(|| (r.lambda_hat - self.true_noise_variance).abs() / self.true_noise_variance)
    }

    /// `|10 log10(lambda_hat / lambda)|`.
    pub fn lambda_error_db(&self) -> Option<f64> {
        let r = self.outcome.as_ref().ok()?;
        (self.true_noise_variance > 0.0).then(|| (10.0 * (r.lambda_hat / self.true_noise_variance).log10()).abs())
    }

    fn csv_row(&self) -> CsvRow {
        let ok = self.outcome.as_ref().ok();
        CsvRow {
            method: self.method.name(),
            snr_db: self.snr_db,
            trial: self.trial,
            nse: ok.map_or(f64::NAN, |r| r.nse),
            f1: ok.map_or(f64::NAN, |r| r.support.f1),
            wall_time_s: ok.map_or(f64::NAN, |r| r.wall_time_s),
            lambda_rel_error: self.lambda_rel_error(),
            converged: ok.is_some_and(|r| r.converged),
            outer_iters: ok.map_or(0, |r| r.outer_iters),
        }
    }
}

#[derive(Serialize)]
struct CsvRow {
    method: &'static str,
    snr_db: f64,
    trial: usize,
    nse: f64,
    f1: f64,
    wall_time_s: f64,
    lambda_rel_error: Option<f64>,
    converged: bool,
    outer_iters: usize,
}

/// One line of `aggregate.csv`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AggregateRow {
    pub method: String,
    pub snr_db: f64,
    pub trials: usize,
    pub failures: usize,
    pub nse_q25: f64,
    pub nse_q50: f64,
    pub nse_q75: f64,
    pub f1_mean: f64,
    pub wall_time_mean_s: f64,
    pub converged_fraction: f64,
}

/// Solves `problem` with `method`. The method decides the noise mode: the
/// `noise_mode` field of `solver` is overridden.
pub fn solve(method: Method, problem: &ProblemInstance, solver: &SolverConfig) -> Result<(RecoveryResult, Vec<TraceRecord>)> {
    let mut config = *solver;
    config.noise_mode = NoiseMode::Estimate;
    match method {
        Method::ExpDol { noise } => {
            if noise == NoiseChoice::Oracle {
                // a noiseless instance has no finite log-variance to pin
                match problem.true_noise_variance() {
                    Some(l) if l > 0.0 => config.noise_mode = NoiseMode::fixed_variance(l)?,
                    _ => {}
                }
            }
            let mut trace = Vec::new();
            let result = solver::run_traced(problem, &config, &mut trace)?;
            Ok((result, trace))
        }
        Method::Sbl => {
            let result = solver::baseline_sbl(problem, &config)?;
            let trace = result
                .cost_trace
                .iter()
                .enumerate()
                .map(|(k, c)| TraceRecord {
                    outer: k + 1,
                    inner: 0,
                    cost: Some(*c),
                    primal_residual: 0.0,
                    grad_norm: 0.0,
                    inner_steps: 0,
                    change: None,
                })
                .collect();
            Ok((result, trace))
        }
    }
}

fn evaluate(method: Method, problem: &ProblemInstance, support: &[usize], solver: &SolverConfig) -> Result<TrialResult> {
    let (result, trace) = solve(method, problem, solver)?;
    let truth = problem
        .ground_truth()
        .ok_or_else(|| Error::Contract("trial instances must carry their ground truth".into()))?;
    let estimated = metrics::estimated_support(&result.x_hat, DEFAULT_DELTA);
    Ok(TrialResult {
        nse: metrics::nse(truth, &result.x_hat)?,
        support: metrics::support_score(support, &estimated),
        lambda_hat: result.lambda_hat,
        wall_time_s: result.wall_time.as_secs_f64(),
        converged: result.converged,
        outer_iters: result.outer_iters_used,
        row_power: linalg::row_norms_sqr(&result.x_hat),
        leakage_fraction: metrics::doa_leakage(support, &result.x_hat),
        trace,
    })
}

fn run_one(config: &ExperimentConfig, snr_db: f64, trial: usize) -> Vec<TrialRecord> {
    let seed = config.seed_base + trial as u64;
    let generated = config.scenario.generate(seed, snr_db);
    config
        .methods
        .iter()
        .map(|&method| {
            let (true_support, true_noise_variance, outcome) = match &generated {
                Ok((problem, support)) => (
                    support.clone(),
                    problem.true_noise_variance().unwrap_or(f64::NAN),
                    evaluate(method, problem, support, &config.solver).map_err(|e| e.to_string()),
                ),
                Err(e) => (Vec::new(), f64::NAN, Err(e.to_string())),
            };
            TrialRecord {
                method,
                snr_db,
                trial,
                seed,
                true_support,
                true_noise_variance,
                outcome,
            }
        })
        .collect()
}

fn pool(threads: Option<usize>) -> Result<rayon::ThreadPool> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(t) = threads {
        builder = builder.num_threads(t);
    }
    builder.build().map_err(|e| Error::Config(format!("cannot start worker pool: {e}")))
}

/// Runs every (SNR, trial, method) combination in memory. Solver failures
/// end up in [`TrialRecord::outcome`]; they never abort the sweep.
pub fn run_trials(config: &ExperimentConfig) -> Result<Vec<TrialRecord>> {
    config.validate()?;
    let jobs: Vec<(f64, usize)> = config
        .snr_sweep
        .iter()
        .flat_map(|&s| (0..config.trials).map(move |t| (s, t)))
        .collect();
    let records: Vec<Vec<TrialRecord>> =
        pool(config.threads)?.install(|| jobs.par_iter().map(|&(s, t)| run_one(config, s, t)).collect());
    Ok(records.into_iter().flatten().collect())
}

/// Quartiles and means per (method, SNR), in first-appearance order.
pub fn aggregate(records: &[TrialRecord]) -> Vec<AggregateRow> {
    let mut keys: Vec<(Method, u64)> = Vec::new();
    for r in records {
        let key = (r.method, r.snr_db.to_bits());
        if !keys.contains(&key) {
            keys.push(key);
        }
    }
    keys.into_iter()
        .map(|(method, snr_bits)| {
            let group: Vec<&TrialRecord> = records
                .iter()
                .filter(|r| r.method == method && r.snr_db.to_bits() == snr_bits)
                .collect();
            let ok: Vec<&TrialResult> = group.iter().filter_map(|r| r.outcome.as_ref().ok()).collect();
            let nse: Vec<f64> = ok.iter().map(|r| r.nse).collect();
            let (q25, q50, q75) = metrics::quartiles(&nse).unwrap_or((f64::NAN, f64::NAN, f64::NAN));
            let mean = |f: &dyn Fn(&TrialResult) -> f64| {
                if ok.is_empty() {
                    f64::NAN
                } else {
                    ok.iter().map(|r| f(r)).sum::<f64>() / ok.len() as f64
                }
            };
            AggregateRow {
                method: method.name().to_string(),
                snr_db: f64::from_bits(snr_bits),
                trials: group.len(),
                failures: group.len() - ok.len(),
                nse_q25: q25,
                nse_q50: q50,
                nse_q75: q75,
                f1_mean: mean(&|r| r.support.f1),
                wall_time_mean_s: mean(&|r| r.wall_time_s),
                converged_fraction: mean(&|r| if r.converged { 1.0 } else { 0.0 }),
            }
        })
        .collect()
}

fn create_dir(path: &Path) -> Result<()> {
    fs::create_dir_all(path).map_err(|e| Error::io(path, e))
}

fn csv_writer(path: &Path, headers: bool) -> Result<csv::Writer<File>> {
    csv::WriterBuilder::new().has_headers(headers).from_path(path).map_err(|e| match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::io(path, io),
        other => Error::Config(format!("{}: {other:?}", path.display())),
    })
}

fn write_rows<T: Serialize>(path: &Path, rows: impl IntoIterator<Item = T>) -> Result<()> {
    let mut w = csv_writer(path, true)?;
    for row in rows {
        w.serialize(row)?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

fn write_trials(path: &Path, records: &[&TrialRecord]) -> Result<()> {
    let mut w = csv_writer(path, false)?;
    // header written explicitly so an empty file still documents the columns
    w.write_record(TRIAL_COLUMNS)?;
    for r in records {
        w.serialize(r.csv_row())?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

fn snr_tag(snr_db: f64) -> String {
    if snr_db.is_infinite() {
        "inf".into()
    } else {
        format!("{snr_db}")
    }
}

fn write_trace(path: &Path, trace: &[TraceRecord]) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut sink = JsonLinesSink::new(BufWriter::new(file));
    for rec in trace {
        sink.record(rec);
    }
    if sink.write_errors > 0 {
        return Err(Error::Config(format!("failed to write {}", path.display())));
    }
    sink.into_inner().flush().map_err(|e| Error::io(path, e))
}

/// Paths written by [`cmd_run`] and friends.
#[derive(Debug, Clone, PartialEq)]
pub struct RunArtifacts {
    pub root: PathBuf,
    pub trials_csv: PathBuf,
    pub aggregate_csv: PathBuf,
    pub records: Vec<TrialRecord>,
}

impl RunArtifacts {
    pub fn failures(&self) -> usize {
        self.records.iter().filter(|r| r.outcome.is_err()).count()
    }
}

fn write_artifacts(config: &ExperimentConfig, records: Vec<TrialRecord>) -> Result<RunArtifacts> {
    let root = config.output_dir.join(config.scenario.name());
    create_dir(&root)?;
    let cfg_path = root.join("config.toml");
    fs::write(&cfg_path, config.to_toml()?).map_err(|e| Error::io(&cfg_path, e))?;

    let all: Vec<&TrialRecord> = records.iter().collect();
    let trials_csv = root.join("trials.csv");
    write_trials(&trials_csv, &all)?;
    let aggregate_csv = root.join("aggregate.csv");
    write_rows(&aggregate_csv, aggregate(&records))?;

    for method in &config.methods {
        let dir = root.join(method.name());
        let traces = dir.join("traces");
        create_dir(&traces)?;
        let mine: Vec<&TrialRecord> = records.iter().filter(|r| r.method == *method).collect();
        write_trials(&dir.join("trials.csv"), &mine)?;
        let owned: Vec<TrialRecord> = mine.iter().map(|r| (*r).clone()).collect();
        write_rows(&dir.join("aggregate.csv"), aggregate(&owned))?;
        for r in &mine {
            if let Ok(res) = &r.outcome {
                let name = format!("snr{}_trial{}.jsonl", snr_tag(r.snr_db), r.trial);
                write_trace(&traces.join(name), &res.trace)?;
            }
        }
    }
    Ok(RunArtifacts {
        root,
        trials_csv,
        aggregate_csv,
        records,
    })
}

/// Full sweep: solve, then write CSVs and traces.
pub fn cmd_run(config: &ExperimentConfig) -> Result<RunArtifacts> {
    let records = run_trials(config)?;
    write_artifacts(config, records)
}

/// One leakage measurement of the DOA command.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LeakageRow {
    pub method: String,
    pub seed: u64,
    pub leakage_fraction: f64,
    pub recall: f64,
    pub f1: f64,
    pub nse: f64,
}

/// Extended-source DOA runs at the SNR stored in the scenario (the sweep is
/// ignored). Besides the `run` artifacts, writes per-seed power spectra and
/// `leakage.csv`.
pub fn cmd_doa(config: &ExperimentConfig) -> Result<RunArtifacts> {
    let spec: DoaSpec = match &config.scenario {
        Scenario::Doa(s) => s.clone(),
        Scenario::Synthetic(_) => return Err(Error::Config("the doa command needs scenario.kind = \"doa\"".into())),
    };
    let doa_config = ExperimentConfig {
        snr_sweep: vec![spec.snr_db],
        ..config.clone()
    };
    let artifacts = cmd_run(&doa_config)?;
    let grid = spec.grid()?;
    let mut leakage = Vec::new();
    for r in &artifacts.records {
        let Ok(res) = &r.outcome else { continue };
        let path = artifacts
            .root
            .join(r.method.name())
            .join(format!("power_seed{}.csv", r.seed));
        write_rows(
            &path,
            res.row_power.iter().enumerate().map(|(i, p)| PowerRow {
                grid_index: i,
                u: grid[i],
                power: *p,
            }),
        )?;
        leakage.push(LeakageRow {
            method: r.method.name().to_string(),
            seed: r.seed,
            leakage_fraction: res.leakage_fraction,
            recall: res.support.recall,
            f1: res.support.f1,
            nse: res.nse,
        });
    }
    write_rows(&artifacts.root.join("leakage.csv"), leakage)?;
    Ok(artifacts)
}

#[derive(Serialize)]
struct PowerRow {
    grid_index: usize,
    u: f64,
    power: f64,
}

/// Sidecar written next to a generated instance.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InstanceMeta {
    pub scenario: Scenario,
    pub seed: u64,
    pub snr_db: f64,
    pub true_support: Vec<usize>,
    pub noise_variance: f64,
}

/// Writes the instance for `seed_base` at the scenario's own SNR:
/// `H.txt`, `Y.txt`, `X.txt` and `instance.json` under
/// `<output_dir>/<scenario>/instance_seed<seed>/`.
pub fn cmd_gen(config: &ExperimentConfig) -> Result<PathBuf> {
    config.validate()?;
    let seed = config.seed_base;
    let snr_db = config.scenario.snr_db();
    let (problem, support) = config.scenario.generate(seed, snr_db)?;
    let dir = config
        .output_dir
        .join(config.scenario.name())
        .join(format!("instance_seed{seed}"));
    create_dir(&dir)?;
    matrix_io::write_matrix(&dir.join("H.txt"), problem.h())?;
    matrix_io::write_matrix(&dir.join("Y.txt"), problem.y())?;
    if let Some(x) = problem.ground_truth() {
        matrix_io::write_matrix(&dir.join("X.txt"), x)?;
    }
    let mut scenario = config.scenario.clone();
    match &mut scenario {
        Scenario::Synthetic(s) => s.seed = seed,
        Scenario::Doa(s) => s.seed = seed,
    }
    let meta = InstanceMeta {
        scenario,
        seed,
        snr_db,
        true_support: support,
        noise_variance: problem.true_noise_variance().unwrap_or(f64::NAN),
    };
    let path = dir.join("instance.json");
    let text = serde_json::to_string_pretty(&meta)?;
    fs::write(&path, text).map_err(|e| Error::io(&path, e))?;
    Ok(dir)
}

#[cfg(feature = "checks")]
mod validate;
#[cfg(feature = "checks")]
pub use validate::{cmd_validate, cmd_validate_with, ValidationReport};
