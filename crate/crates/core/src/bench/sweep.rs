use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{run_experiment, BenchError, ExperimentConfig, RunArtifacts, Summary, SCHEMA_VERSION};
use crate::solver::SampleSchedule;

pub const SWEEP_CSV: &str = "sweep.csv";

fn default_schema() -> u32 {
    SCHEMA_VERSION
}

/// A list of experiments: explicit `runs`, plus the grid `base × horizons ×
/// samples × lanes` when `base` is given.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    #[serde(default = "default_schema")]
    pub schema_version: u32,
    #[serde(default)]
    pub runs: Vec<ExperimentConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub base: Option<ExperimentConfig>,
    #[serde(default)]
    pub horizons: Vec<usize>,
    #[serde(default)]
    pub samples: Vec<usize>,
    #[serde(default)]
    pub lanes: Vec<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<PathBuf>,
}

impl SweepConfig {
    pub fn from_json(text: &str) -> Result<Self, BenchError> {
        serde_json::from_str(text).map_err(|e| BenchError::Config(format!("invalid sweep config: {e}")))
    }

    pub fn load(path: &Path) -> Result<Self, BenchError> {
        let text = fs::read_to_string(path).map_err(|e| BenchError::Config(format!("{}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    /// The experiments in run order. Grid points get seeds derived from the
    /// base seed and their position so no two share a sample stream.
    pub fn expand(&self) -> Result<Vec<ExperimentConfig>, BenchError> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(BenchError::Config(format!("unsupported schema_version {}", self.schema_version)));
        }
        let mut out: Vec<ExperimentConfig> = self.runs.iter().map(|c| c.clone().resolve()).collect();
        if let Some(base) = &self.base {
            let base = base.clone().resolve();
            if matches!(base.samples, SampleSchedule::PerStep(_)) && !self.horizons.is_empty() && self.samples.is_empty() {
                return Err(BenchError::Config("per-step sample counts cannot follow a horizon sweep".into()));
            }
            let or_base = |v: &Vec<usize>, b: usize| if v.is_empty() { vec![b] } else { v.clone() };
            let horizons = or_base(&self.horizons, base.horizon);
            let lanes = or_base(&self.lanes, base.lanes);
            let samples: Vec<SampleSchedule> = if self.samples.is_empty() {
                vec![base.samples.clone()]
            } else {
                self.samples.iter().map(|&n| SampleSchedule::Uniform(n)).collect()
            };
            let base_seed = base.sampler.as_ref().map_or(0, |s| s.seed);
            let mut i = 0u64;
            for &h in &horizons {
                for s in &samples {
                    for &p in &lanes {
                        let mut c = base.clone();
                        c.horizon = h;
                        c.samples = s.clone();
                        c.lanes = p;
                        c.name = Some(format!("{}_N{h}_n{}_p{p}", base.display_name(), s.max()));
                        if let Some(sampler) = &mut c.sampler {
                            sampler.seed = base_seed.wrapping_add(0x9e37_79b9_7f4a_7c15u64.wrapping_mul(i));
                        }
                        out.push(c);
                        i += 1;
                    }
                }
            }
        }
        if out.is_empty() {
            return Err(BenchError::Config("sweep lists no experiments".into()));
        }
        Ok(out)
    }
}

/// One line of the combined sweep CSV.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub config_id: usize,
    pub name: String,
    pub plant: String,
    pub horizon: usize,
    pub n_bar: usize,
    pub lanes: usize,
    pub pruning: bool,
    pub seed: u64,
    pub status: String,
    pub exit_code: i32,
    pub steps_completed: usize,
    pub run_elapsed_ms_median: f64,
    pub step_elapsed_ms_median: f64,
    pub f_evals_total: u64,
    pub cost_evals_total: u64,
    pub f_evals_per_solve_max: u64,
    pub cost_evals_per_solve_max: u64,
    pub predicted_f_evals_per_solve: u64,
    pub predicted_cost_evals_per_solve: u64,
    pub serial_exact: f64,
    pub serial_bound: f64,
    pub full_parallel: f64,
    pub p_parallel: f64,
}

#[derive(Debug)]
pub struct SweepOutcome {
    pub rows: Vec<SweepRow>,
    /// Per experiment: its artifacts, or the error that stopped it.
    pub runs: Vec<Result<RunArtifacts, BenchError>>,
    pub sweep_csv: PathBuf,
}

impl SweepOutcome {
    pub fn failures(&self) -> usize {
        self.runs.iter().filter(|r| r.is_err()).count()
    }
}

fn row_for(id: usize, cfg: &ExperimentConfig, summary: Option<&Summary>, status: &str, exit_code: i32) -> SweepRow {
    let samples = cfg.samples.per_step(cfg.horizon).unwrap_or_default();
    let predicted = crate::complexity::predict(&samples, cfg.cost_model, cfg.lanes);
    let mut row = SweepRow {
        config_id: id,
        name: cfg.display_name().to_string(),
        plant: cfg.plant.name().to_string(),
        horizon: cfg.horizon,
        n_bar: cfg.samples.max(),
        lanes: cfg.lanes,
        pruning: cfg.pruning,
        seed: cfg.sampler.as_ref().map_or(0, |s| s.seed),
        status: status.to_string(),
        exit_code,
        steps_completed: 0,
        run_elapsed_ms_median: 0.0,
        step_elapsed_ms_median: 0.0,
        f_evals_total: 0,
        cost_evals_total: 0,
        f_evals_per_solve_max: 0,
        cost_evals_per_solve_max: 0,
        predicted_f_evals_per_solve: crate::complexity::step_count(&samples),
        predicted_cost_evals_per_solve: crate::complexity::cost_eval_count(&samples),
        serial_exact: predicted.serial_exact,
        serial_bound: predicted.serial_bound,
        full_parallel: predicted.full_parallel,
        p_parallel: predicted.p_parallel,
    };
    if let Some(s) = summary {
        row.steps_completed = s.steps_completed;
        row.run_elapsed_ms_median = s.timing.run_elapsed_ms_median;
        row.step_elapsed_ms_median = s.timing.step_elapsed_ms_median;
        row.f_evals_total = s.totals.f_evals;
        row.cost_evals_total = s.totals.cost_evals;
        row.f_evals_per_solve_max = s.totals.f_evals_per_solve_max;
        row.cost_evals_per_solve_max = s.totals.cost_evals_per_solve_max;
    }
    row
}

fn read_summary(path: &Path) -> Option<Summary> {
    serde_json::from_str(&fs::read_to_string(path).ok()?).ok()
}

/// Runs every experiment in order, each in its own subdirectory of `dir`,
/// and writes the combined `sweep.csv`. A failed experiment is recorded and
/// the sweep moves on.
pub fn sweep(configs: &[ExperimentConfig], dir: &Path) -> Result<SweepOutcome, BenchError> {
    if configs.is_empty() {
        return Err(BenchError::Config("sweep needs at least one experiment".into()));
    }
    fs::create_dir_all(dir).map_err(|e| BenchError::io(dir.display().to_string(), e))?;
    let mut rows = Vec::with_capacity(configs.len());
    let mut runs = Vec::with_capacity(configs.len());
    for (id, cfg) in configs.iter().enumerate() {
        let cfg = cfg.clone().resolve();
        let sub = dir.join(format!("{id:03}_{}", cfg.display_name()));
        let result = run_experiment(&cfg, &sub);
        let row = match &result {
            Ok(a) => row_for(id, &cfg, read_summary(&a.summary_json).as_ref(), "completed", 0),
            Err(e) => {
                if !matches!(e, BenchError::Solver { .. }) {
                    let _ = super::write_error(&sub, e);
                }
                row_for(id, &cfg, read_summary(&sub.join(super::SUMMARY_JSON)).as_ref(), e.kind(), e.exit_code())
            }
        };
        rows.push(row);
        runs.push(result);
    }
    let sweep_csv = dir.join(SWEEP_CSV);
    let mut w = csv::Writer::from_path(&sweep_csv).map_err(|e| BenchError::io(sweep_csv.display().to_string(), e))?;
    for row in &rows {
        w.serialize(row).map_err(|e| BenchError::io(sweep_csv.display().to_string(), e))?;
    }
    w.flush().map_err(|e| BenchError::io(sweep_csv.display().to_string(), e))?;
    Ok(SweepOutcome { rows, runs, sweep_csv })
}
