use std::fs;
use std::path::{Path, PathBuf};
use std::time::Duration;

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use super::BenchError;
use crate::complexity::CostModel;
use crate::models::{Benchmark, BuckBoost, BuckBoostParams, CartSpring, CartSpringParams, Wmr, WmrParams};
use crate::plant::{Plan, StateVec};
use crate::sampling::{SamplerConfig, SamplerScheme};
use crate::solver::{Problem, SampleSchedule, SolverConfig, WarmStartMode};

pub const SCHEMA_VERSION: u32 = 1;

/// Benchmark plant and its parameter overrides.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PlantConfig {
    CartSpring(CartSpringParams),
    BuckBoost(BuckBoostParams),
    Wmr(WmrParams),
}

impl PlantConfig {
    pub fn name(&self) -> &'static str {
        match self {
            PlantConfig::CartSpring(_) => "cart_spring",
            PlantConfig::BuckBoost(_) => "buck_boost",
            PlantConfig::Wmr(_) => "wmr",
        }
    }

    pub fn problem(&self, horizon: usize) -> Problem {
        match self {
            PlantConfig::CartSpring(p) => Problem::from_benchmark(CartSpring::new(*p), horizon),
            PlantConfig::BuckBoost(p) => Problem::from_benchmark(BuckBoost::new(*p), horizon),
            PlantConfig::Wmr(p) => Problem::from_benchmark(Wmr::new(*p), horizon),
        }
    }

    pub fn default_initial_state(&self) -> StateVec {
        match self {
            PlantConfig::CartSpring(p) => CartSpring::new(*p).default_initial_state(),
            PlantConfig::BuckBoost(p) => BuckBoost::new(*p).default_initial_state(),
            PlantConfig::Wmr(p) => Wmr::new(*p).default_initial_state(),
        }
    }

    pub fn default_sampler(&self) -> SamplerConfig {
        match self {
            PlantConfig::CartSpring(_) => SamplerConfig::new(SamplerScheme::Halton),
            PlantConfig::BuckBoost(_) | PlantConfig::Wmr(_) => SamplerConfig::new(SamplerScheme::Random),
        }
    }

    pub fn default_warm_start(&self) -> WarmStartMode {
        match self {
            PlantConfig::Wmr(_) => WarmStartMode::FeasibleSample,
            _ => WarmStartMode::TerminalController,
        }
    }

    fn check_params(&self) -> Result<(), BenchError> {
        let positive: Vec<(&str, f64)> = match self {
            PlantConfig::CartSpring(p) => vec![("ts", p.ts), ("mass", p.mass), ("rho0", p.rho0), ("h_d", p.h_d)],
            PlantConfig::BuckBoost(p) => vec![
                ("ts", p.ts),
                ("r_l", p.r_l),
                ("c_f", p.c_f),
                ("l_f", p.l_f),
                ("v_s", p.v_s),
                ("r_h", p.r_h),
                ("terminal_level", p.terminal_level),
            ],
            PlantConfig::Wmr(p) => {
                let mut v = vec![("ts", p.ts)];
                if let Some(o) = &p.obstacle {
                    v.push(("obstacle.radius", o.radius));
                }
                v
            }
        };
        for (name, value) in positive {
            if !(value > 0.0 && value.is_finite()) {
                return Err(BenchError::Config(format!("{} parameter {name} must be positive, got {value}", self.name())));
            }
        }
        Ok(())
    }
}

fn default_schema() -> u32 {
    SCHEMA_VERSION
}

fn default_lanes() -> usize {
    1
}

fn default_true() -> bool {
    true
}

fn default_oracle_budget() -> usize {
    100_000
}

fn default_warm_start_budget() -> usize {
    1_000
}

fn default_repeats() -> usize {
    1
}

/// One closed-loop experiment, as read from a JSON file.
///
/// Optional fields left out take plant-specific defaults; [`resolve`](Self::resolve)
/// fills them in so the echoed copy is self-contained.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default = "default_schema")]
    pub schema_version: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    pub plant: PlantConfig,
    pub horizon: usize,
    /// `n̄` or one count per horizon position.
    pub samples: SampleSchedule,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sampler: Option<SamplerConfig>,
    #[serde(default = "default_lanes")]
    pub lanes: usize,
    pub steps: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub initial_state: Option<Vec<f64>>,
    /// Replaces the random initial search.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub initial_plan: Option<Vec<Vec<f64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub time_budget_ms: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub candidate_budget: Option<usize>,
    #[serde(default = "default_true")]
    pub pruning: bool,
    #[serde(default = "default_oracle_budget")]
    pub oracle_budget: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub warm_start: Option<WarmStartMode>,
    #[serde(default = "default_warm_start_budget")]
    pub warm_start_budget: usize,
    #[serde(default = "default_true")]
    pub improve_initial: bool,
    /// Per-operation costs for the predicted work in the summary.
    #[serde(default)]
    pub cost_model: CostModel,
    /// Whole-run repetitions; the summary reports median wall time.
    #[serde(default = "default_repeats")]
    pub repeats: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<PathBuf>,
}

impl ExperimentConfig {
    /// Default settings for `plant` with everything optional resolved.
    pub fn new(plant: PlantConfig, horizon: usize, samples: usize, steps: usize) -> Self {
        ExperimentConfig {
            schema_version: SCHEMA_VERSION,
            name: None,
            plant,
            horizon,
            samples: SampleSchedule::Uniform(samples),
            sampler: None,
            lanes: 1,
            steps,
            initial_state: None,
            initial_plan: None,
            time_budget_ms: None,
            candidate_budget: None,
            pruning: true,
            oracle_budget: default_oracle_budget(),
            warm_start: None,
            warm_start_budget: default_warm_start_budget(),
            improve_initial: true,
            cost_model: CostModel::UNIT,
            repeats: 1,
            output_dir: None,
        }
        .resolve()
    }

    pub fn from_json(text: &str) -> Result<Self, BenchError> {
        serde_json::from_str(text).map_err(|e| BenchError::Config(format!("invalid experiment config: {e}")))
    }

    pub fn load(path: &Path) -> Result<Self, BenchError> {
        let text = fs::read_to_string(path).map_err(|e| BenchError::Config(format!("{}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    /// Fills plant-dependent defaults.
    pub fn resolve(mut self) -> Self {
        if self.name.is_none() {
            self.name = Some(self.plant.name().to_string());
        }
        if self.sampler.is_none() {
            self.sampler = Some(self.plant.default_sampler());
        }
        if self.warm_start.is_none() {
            self.warm_start = Some(self.plant.default_warm_start());
        }
        if self.initial_state.is_none() {
            self.initial_state = Some(self.plant.default_initial_state().iter().copied().collect());
        }
        self
    }

    pub fn display_name(&self) -> &str {
        self.name.as_deref().unwrap_or(self.plant.name())
    }

    /// Checks the config against the plant's declared dimensions and ranges.
    pub fn validate(&self) -> Result<(), BenchError> {
        let err = |m: String| Err(BenchError::Config(m));
        if self.schema_version != SCHEMA_VERSION {
            return err(format!("unsupported schema_version {} (expected {SCHEMA_VERSION})", self.schema_version));
        }
        if self.horizon == 0 {
            return err("horizon must be at least 1".into());
        }
        if self.lanes == 0 {
            return err("lanes must be at least 1".into());
        }
        if self.repeats == 0 {
            return err("repeats must be at least 1".into());
        }
        if let SampleSchedule::PerStep(v) = &self.samples {
            if v.len() != self.horizon {
                return err(format!("samples lists {} counts for horizon {}", v.len(), self.horizon));
            }
        }
        if let Some(ms) = self.time_budget_ms {
            if !(ms >= 0.0 && ms.is_finite()) {
                return err(format!("time_budget_ms must be a nonnegative number, got {ms}"));
            }
        }
        if !(self.cost_model.c1 >= 0.0 && self.cost_model.c2 >= 0.0) {
            return err("cost_model coefficients must be nonnegative".into());
        }
        self.plant.check_params()?;
        let problem = self.plant.problem(self.horizon);
        let x0 = self.initial_state_vec();
        let n = problem.model.state_dim();
        if x0.len() != n {
            return err(format!("initial_state has {} entries, {} expects {n}", x0.len(), self.plant.name()));
        }
        if x0.iter().any(|v| !v.is_finite()) {
            return err("initial_state must be finite".into());
        }
        if let Some(kind) = problem.constraints.state_violation(&x0, false) {
            return err(format!("initial_state violates the {kind} constraint"));
        }
        if let Some(sampler) = &self.sampler {
            if let Some(w) = &sampler.warp {
                if w.anchor.len() != problem.model.input_dim() {
                    return err("sampler warp anchor has the wrong dimension".into());
                }
                if w.exponent.is_nan() || w.exponent <= 0.0 {
                    return err("sampler warp exponent must be positive".into());
                }
            }
            if sampler.scheme == SamplerScheme::Grid || sampler.warp.is_some() {
                if let Some(i) = problem.constraints.input_box.first_unbounded() {
                    return err(format!("input coordinate {i} is unbounded, so it cannot be sampled"));
                }
            }
        }
        if let Some(rows) = &self.initial_plan {
            if rows.len() != self.horizon {
                return err(format!("initial_plan has {} inputs for horizon {}", rows.len(), self.horizon));
            }
            if rows.iter().any(|u| u.len() != problem.model.input_dim()) {
                return err("initial_plan inputs have the wrong dimension".into());
            }
        }
        Ok(())
    }

    pub fn initial_state_vec(&self) -> StateVec {
        match &self.initial_state {
            Some(v) => DVector::from_vec(v.clone()),
            None => self.plant.default_initial_state(),
        }
    }

    pub fn initial_plan(&self) -> Option<Plan> {
        self.initial_plan
            .as_ref()
            .and_then(|rows| Plan::new(rows.iter().map(|u| DVector::from_vec(u.clone())).collect()).ok())
    }

    pub fn solver_config(&self) -> SolverConfig {
        let mut cfg = SolverConfig::new(self.horizon, 0);
        cfg.samples = self.samples.clone();
        cfg.sampler = self.sampler.clone().unwrap_or_else(|| self.plant.default_sampler());
        cfg.lanes = self.lanes;
        cfg.time_budget = self.time_budget_ms.map(|ms| Duration::from_secs_f64(ms / 1e3));
        cfg.candidate_budget = self.candidate_budget;
        cfg.pruning = self.pruning;
        cfg.oracle_budget = self.oracle_budget;
        cfg.warm_start = self.warm_start.unwrap_or_else(|| self.plant.default_warm_start());
        cfg.warm_start_budget = self.warm_start_budget;
        cfg.improve_initial = self.improve_initial;
        cfg
    }
}

/// Command-line overrides applied on top of a loaded config.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub lanes: Option<usize>,
    pub budget_ms: Option<f64>,
    pub no_prune: bool,
}

impl Overrides {
    pub fn apply(&self, cfg: &mut ExperimentConfig) {
        if let Some(seed) = self.seed {
            let mut sampler = cfg.sampler.clone().unwrap_or_else(|| cfg.plant.default_sampler());
            sampler.seed = seed;
            cfg.sampler = Some(sampler);
        }
        if let Some(lanes) = self.lanes {
            cfg.lanes = lanes;
        }
        if let Some(ms) = self.budget_ms {
            cfg.time_budget_ms = Some(ms);
        }
        if self.no_prune {
            cfg.pruning = false;
        }
    }
}
