//! Sampling-based improvement of feasible input plans.
//!
//! [`improve_plan`] sweeps the horizon backward, replacing one input at a time
//! with sampled alternatives and keeping a replacement only when it stays
//! feasible and strictly lowers the cost. Because every candidate in a sweep
//! step differs from the reference at the same position, a step can be
//! evaluated on any number of lanes and reduced to the same winner.

mod closed_loop;
mod improve;
mod oracle;
mod warm_start;

use std::sync::Arc;
use std::time::Duration;

use serde::{Deserialize, Serialize};

pub use closed_loop::{closed_loop, simulate, Controller, RunLog, StepOutcome, StepRecord, Termination};
pub use improve::{improve_plan, improve_plan_with_pool};
pub use oracle::{find_oracle, OracleOutcome};
pub use warm_start::{make_warm_start, WarmStart};

use crate::constraints::ConstraintSpec;
use crate::cost::CostSpec;
use crate::error::{check_dim, NmpcError, Result};
use crate::models::Benchmark;
use crate::plant::{Plan, PlantModel, Trajectory};
use crate::sampling::SamplerConfig;

/// Plant, admissible sets and cost of one control problem.
#[derive(Debug, Clone)]
pub struct Problem {
    pub model: Arc<dyn PlantModel>,
    pub constraints: ConstraintSpec,
    pub cost: CostSpec,
}

impl Problem {
    pub fn new(model: Arc<dyn PlantModel>, constraints: ConstraintSpec, cost: CostSpec) -> Result<Self> {
        check_dim("constraint state dimension", model.state_dim(), constraints.state_dim())?;
        check_dim("constraint input dimension", model.input_dim(), constraints.input_dim())?;
        check_dim("cost state dimension", model.state_dim(), cost.state_ref().len())?;
        check_dim("cost input dimension", model.input_dim(), cost.input_ref().len())?;
        Ok(Problem {
            model,
            constraints,
            cost,
        })
    }

    /// The benchmark's own constraints and cost over `horizon` steps.
    pub fn from_benchmark<B: Benchmark + 'static>(plant: B, horizon: usize) -> Self {
        let constraints = plant.constraints();
        let cost = plant.cost(horizon);
        Problem {
            model: Arc::new(plant),
            constraints,
            cost,
        }
    }

    pub fn horizon(&self) -> usize {
        self.cost.horizon()
    }
}

/// Samples drawn per horizon position.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum SampleSchedule {
    /// The same `n̄` at every position.
    Uniform(usize),
    /// One count per position `j = 0 .. N-1`.
    PerStep(Vec<usize>),
}

impl SampleSchedule {
    pub fn per_step(&self, horizon: usize) -> Result<Vec<usize>> {
        match self {
            SampleSchedule::Uniform(n) => Ok(vec![*n; horizon]),
            SampleSchedule::PerStep(v) => {
                check_dim("per-step sample counts", horizon, v.len())?;
                Ok(v.clone())
            }
        }
    }

    pub fn max(&self) -> usize {
        match self {
            SampleSchedule::Uniform(n) => *n,
            SampleSchedule::PerStep(v) => v.iter().copied().max().unwrap_or(0),
        }
    }
}

/// How the plan shifted from the previous step is completed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WarmStartMode {
    /// Append the terminal law evaluated at the previous predicted end state.
    TerminalController,
    /// Append the first sampled input that keeps the shifted plan feasible.
    FeasibleSample,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverConfig {
    pub horizon: usize,
    pub samples: SampleSchedule,
    pub sampler: SamplerConfig,
    /// Parallel evaluation lanes; results do not depend on this.
    pub lanes: usize,
    /// Wall-clock budget of one improvement pass.
    pub time_budget: Option<Duration>,
    /// Maximum candidates evaluated in one improvement pass.
    pub candidate_budget: Option<usize>,
    /// Abandon a candidate rollout at its first constraint violation.
    pub pruning: bool,
    /// Random full sequences tried when searching for an initial feasible plan.
    pub oracle_budget: usize,
    pub warm_start: WarmStartMode,
    /// Candidate appends tried before a warm start is declared failed.
    pub warm_start_budget: usize,
    /// Run an improvement pass on the initial plan at `k = 0`.
    pub improve_initial: bool,
}

impl SolverConfig {
    pub fn new(horizon: usize, samples_per_step: usize) -> Self {
        SolverConfig {
            horizon,
            samples: SampleSchedule::Uniform(samples_per_step),
            sampler: SamplerConfig::default(),
            lanes: 1,
            time_budget: None,
            candidate_budget: None,
            pruning: true,
            oracle_budget: 100_000,
            warm_start: WarmStartMode::TerminalController,
            warm_start_budget: 1_000,
            improve_initial: true,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.horizon == 0 {
            return Err(NmpcError::Contract("horizon must be at least 1".into()));
        }
        if self.lanes == 0 {
            return Err(NmpcError::Contract("at least one lane is required".into()));
        }
        self.samples.per_step(self.horizon)?;
        Ok(())
    }
}

/// Outcome of one improvement pass.
#[derive(Debug, Clone, PartialEq)]
pub struct SolveResult {
    pub plan: Plan,
    /// Predicted states of `plan`.
    pub trajectory: Trajectory,
    /// Cost of `plan`; never above `warm_cost`.
    pub cost: f64,
    /// Cost of the warm start handed to the pass.
    pub warm_cost: f64,
    pub f_evals: u64,
    pub cost_evals: u64,
    /// Accepted replacements.
    pub improvements: u64,
    pub elapsed: Duration,
    pub budget_hit: bool,
    /// Reference cost after each sweep step, in sweep order (`j = N-1` first).
    pub sweep_costs: Vec<f64>,
}
