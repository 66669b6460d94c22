use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Duration;

use serde::{Deserialize, Serialize};

use super::{error_kind, BenchError, ExperimentConfig};
use crate::complexity::{cost_eval_count, predict, step_count, ComplexityReport, CostModel};
use crate::solver::{simulate, RunLog, Termination};

pub const STEPS_CSV: &str = "steps.csv";
pub const SUMMARY_JSON: &str = "summary.json";
pub const CONFIG_JSON: &str = "config.json";
pub const ERROR_JSON: &str = "error.json";

/// Files written by one experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunArtifacts {
    pub dir: PathBuf,
    pub steps_csv: PathBuf,
    pub summary_json: PathBuf,
    pub config_json: PathBuf,
    pub error_json: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TerminationInfo {
    /// `completed` or the error kind that stopped the run.
    pub reason: String,
    pub k: Option<usize>,
    pub message: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Totals {
    pub f_evals: u64,
    pub cost_evals: u64,
    pub f_evals_per_solve_max: u64,
    pub cost_evals_per_solve_max: u64,
    pub improvements: u64,
    pub budget_hits: usize,
    pub elapsed_ms: f64,
    pub solve_elapsed_ms: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Timing {
    pub repeats: usize,
    /// Wall time of each whole run.
    pub run_elapsed_ms: Vec<f64>,
    pub run_elapsed_ms_median: f64,
    pub step_elapsed_ms_median: f64,
    pub step_elapsed_ms_max: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleInfo {
    pub draws: usize,
    pub f_evals: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComplexitySummary {
    pub cost_model: CostModel,
    /// Predicted work of one full improvement pass.
    pub per_solve: ComplexityReport,
    pub predicted_f_evals_per_solve: u64,
    pub predicted_cost_evals_per_solve: u64,
    /// Solves whose counters disagree with the prediction (exact match without
    /// pruning, upper bound with pruning or after a budget stop).
    pub counter_mismatches: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub schema_version: u32,
    pub name: String,
    pub plant: String,
    pub horizon: usize,
    pub samples_per_step: Vec<usize>,
    pub lanes: usize,
    pub pruning: bool,
    pub steps_requested: usize,
    pub steps_completed: usize,
    pub termination: TerminationInfo,
    pub initial_state: Vec<f64>,
    pub final_state: Vec<f64>,
    pub final_cost: Option<f64>,
    pub totals: Totals,
    pub timing: Timing,
    pub oracle: Option<OracleInfo>,
    pub complexity: ComplexitySummary,
}

/// Machine-readable failure record.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorReport {
    pub error: String,
    pub message: String,
    pub k: Option<usize>,
    pub exit_code: i32,
}

impl ErrorReport {
    pub fn from_error(err: &BenchError) -> Self {
        ErrorReport {
            error: err.kind().to_string(),
            message: err.to_string(),
            k: match err {
                BenchError::Solver { k, .. } => Some(*k),
                _ => None,
            },
            exit_code: err.exit_code(),
        }
    }
}

fn ms(d: Duration) -> f64 {
    d.as_secs_f64() * 1e3
}

fn num(v: f64) -> String {
    format!("{v:.16e}")
}

fn median(mut v: Vec<f64>) -> f64 {
    if v.is_empty() {
        return 0.0;
    }
    v.sort_by(f64::total_cmp);
    v[v.len() / 2]
}

/// Runs the closed loop `cfg.repeats` times and returns the first log with
/// the wall time of every repetition.
pub fn run_log(cfg: &ExperimentConfig) -> Result<(RunLog, Vec<Duration>), BenchError> {
    cfg.validate()?;
    let x0 = cfg.initial_state_vec();
    let mut first = None;
    let mut times = Vec::with_capacity(cfg.repeats);
    for _ in 0..cfg.repeats {
        let problem = cfg.plant.problem(cfg.horizon);
        let start = std::time::Instant::now();
        let log = simulate(problem, cfg.solver_config(), &x0, cfg.steps, cfg.initial_plan());
        times.push(start.elapsed());
        first.get_or_insert(log);
    }
    Ok((first.expect("at least one repeat"), times))
}

/// Per-step CSV; numbers carry 17 significant digits.
pub fn write_steps_csv<W: Write>(log: &RunLog, out: W) -> Result<(), BenchError> {
    let n = log.initial_state.len();
    let m = log.input_dim;
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec!["k".to_string()];
    header.extend((0..n).map(|i| format!("x{i}")));
    header.extend((0..m).map(|i| format!("u{i}")));
    header.extend(
        ["J_sub", "f_evals", "cost_evals", "elapsed_ms", "budget_hit", "J_warm", "improvements"]
            .map(String::from),
    );
    let io = |e: csv::Error| BenchError::io("steps.csv", e);
    w.write_record(&header).map_err(io)?;
    for r in &log.records {
        let mut row = vec![r.k.to_string()];
        row.extend(r.state.iter().map(|v| num(*v)));
        row.extend(r.input.iter().map(|v| num(*v)));
        row.push(num(r.cost));
        row.push(r.f_evals.to_string());
        row.push(r.cost_evals.to_string());
        row.push(num(ms(r.elapsed)));
        row.push(u8::from(r.budget_hit).to_string());
        row.push(num(r.warm_cost));
        row.push(r.improvements.to_string());
        w.write_record(&row).map_err(io)?;
    }
    w.flush().map_err(|e| BenchError::io("steps.csv", e))?;
    Ok(())
}

pub fn steps_csv_string(log: &RunLog) -> String {
    let mut buf = Vec::new();
    write_steps_csv(log, &mut buf).expect("writing to memory");
    String::from_utf8(buf).expect("csv is utf-8")
}

pub fn summarize(cfg: &ExperimentConfig, log: &RunLog, run_times: &[Duration]) -> Summary {
    let samples = cfg.samples.per_step(cfg.horizon).unwrap_or_default();
    let predicted_f = step_count(&samples);
    let predicted_c = cost_eval_count(&samples);
    let counter_mismatches = log
        .records
        .iter()
        .filter(|r| {
            let (f, c) = if r.k == 0 && !cfg.improve_initial { (0, 0) } else { (predicted_f, predicted_c) };
            if cfg.pruning || r.budget_hit {
                r.f_evals > f || r.cost_evals > c
            } else {
                r.f_evals != f || r.cost_evals != c
            }
        })
        .count();
    let termination = match &log.termination {
        Termination::Completed => TerminationInfo {
            reason: "completed".into(),
            k: None,
            message: None,
        },
        Termination::Failed { k, error } => TerminationInfo {
            reason: error_kind(error).into(),
            k: Some(*k),
            message: Some(error.to_string()),
        },
    };
    let steps: Vec<f64> = log.records.iter().map(|r| ms(r.elapsed)).collect();
    let run_ms: Vec<f64> = run_times.iter().map(|d| ms(*d)).collect();
    Summary {
        schema_version: super::SCHEMA_VERSION,
        name: cfg.display_name().to_string(),
        plant: cfg.plant.name().to_string(),
        horizon: cfg.horizon,
        samples_per_step: samples.clone(),
        lanes: cfg.lanes,
        pruning: cfg.pruning,
        steps_requested: cfg.steps,
        steps_completed: log.records.len(),
        termination,
        initial_state: log.initial_state.iter().copied().collect(),
        final_state: log.final_state.iter().copied().collect(),
        final_cost: log.records.last().map(|r| r.cost),
        totals: Totals {
            f_evals: log.records.iter().map(|r| r.f_evals).sum(),
            cost_evals: log.records.iter().map(|r| r.cost_evals).sum(),
            f_evals_per_solve_max: log.records.iter().map(|r| r.f_evals).max().unwrap_or(0),
            cost_evals_per_solve_max: log.records.iter().map(|r| r.cost_evals).max().unwrap_or(0),
            improvements: log.records.iter().map(|r| r.improvements).sum(),
            budget_hits: log.records.iter().filter(|r| r.budget_hit).count(),
            elapsed_ms: steps.iter().sum(),
            solve_elapsed_ms: log.records.iter().map(|r| ms(r.solve_elapsed)).sum(),
        },
        timing: Timing {
            repeats: run_ms.len(),
            run_elapsed_ms_median: median(run_ms.clone()),
            run_elapsed_ms: run_ms,
            step_elapsed_ms_median: median(steps.clone()),
            step_elapsed_ms_max: steps.iter().copied().fold(0.0, f64::max),
        },
        oracle: log.oracle_draws.map(|draws| OracleInfo {
            draws,
            f_evals: log.oracle_f_evals,
        }),
        complexity: ComplexitySummary {
            cost_model: cfg.cost_model,
            per_solve: predict(&samples, cfg.cost_model, cfg.lanes),
            predicted_f_evals_per_solve: predicted_f,
            predicted_cost_evals_per_solve: predicted_c,
            counter_mismatches,
        },
    }
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), BenchError> {
    let text = serde_json::to_string_pretty(value).expect("report serializes");
    fs::write(path, text + "\n").map_err(|e| BenchError::io(path.display().to_string(), e))
}

/// Writes `error.json` for a failure that happened before or during a run.
pub fn write_error(dir: &Path, err: &BenchError) -> Result<PathBuf, BenchError> {
    fs::create_dir_all(dir).map_err(|e| BenchError::io(dir.display().to_string(), e))?;
    let path = dir.join(ERROR_JSON);
    write_json(&path, &ErrorReport::from_error(err))?;
    Ok(path)
}

/// Runs one experiment and writes its artifacts into `dir`.
///
/// A solver failure still leaves the partial CSV, the summary and
/// `error.json` behind; the error carries their paths.
pub fn run_experiment(cfg: &ExperimentConfig, dir: &Path) -> Result<RunArtifacts, BenchError> {
    let cfg = cfg.clone().resolve();
    cfg.validate()?;
    fs::create_dir_all(dir).map_err(|e| BenchError::io(dir.display().to_string(), e))?;
    let mut artifacts = RunArtifacts {
        dir: dir.to_path_buf(),
        steps_csv: dir.join(STEPS_CSV),
        summary_json: dir.join(SUMMARY_JSON),
        config_json: dir.join(CONFIG_JSON),
        error_json: None,
    };
    let stale = dir.join(ERROR_JSON);
    if stale.exists() {
        fs::remove_file(&stale).map_err(|e| BenchError::io(stale.display().to_string(), e))?;
    }
    write_json(&artifacts.config_json, &cfg)?;
    let (log, times) = run_log(&cfg)?;
    let file = fs::File::create(&artifacts.steps_csv)
        .map_err(|e| BenchError::io(artifacts.steps_csv.display().to_string(), e))?;
    write_steps_csv(&log, std::io::BufWriter::new(file))?;
    write_json(&artifacts.summary_json, &summarize(&cfg, &log, &times))?;
    match log.termination {
        Termination::Completed => Ok(artifacts),
        Termination::Failed { k, error } => {
            let mut err = BenchError::Solver {
                k,
                error,
                artifacts: None,
            };
            artifacts.error_json = Some(write_error(dir, &err)?);
            if let BenchError::Solver { artifacts: a, .. } = &mut err {
                *a = Some(Box::new(artifacts));
            }
            Err(err)
        }
    }
}
