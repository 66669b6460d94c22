use std::time::{Duration, Instant};

use rayon::ThreadPool;

use super::improve::build_pool;
use super::{
    find_oracle, improve_plan_with_pool, make_warm_start, OracleOutcome, Problem, SolveResult, SolverConfig,
};
use crate::error::{check_dim, NmpcError, Result};
use crate::plant::{InputVec, Plan, StateVec};
use crate::sampling::{SamplerConfig, SamplerState};

/// Receding-horizon controller: one [`Controller::solve`] per sampling instant.
///
/// The first call starts from the provided plan or a random feasible one;
/// later calls shift the previous solution into a warm start.
pub struct Controller {
    problem: Problem,
    cfg: SolverConfig,
    sampler: SamplerState,
    warm_sampler: SamplerState,
    pool: Option<ThreadPool>,
    initial_plan: Option<Plan>,
    previous: Option<SolveResult>,
    k: usize,
}

/// Result of one controller call.
#[derive(Debug, Clone)]
pub struct StepOutcome {
    pub result: SolveResult,
    /// Present on the first call when the initial plan came from random search.
    pub oracle: Option<OracleOutcome>,
    /// Candidate appends spent on the warm start (zero on the first call).
    pub warm_start_attempts: usize,
    /// Wall time of the whole call, including initial search or warm start.
    pub elapsed: Duration,
}

impl StepOutcome {
    pub fn input(&self) -> &InputVec {
        self.result.plan.first()
    }
}

impl Controller {
    pub fn new(problem: Problem, cfg: SolverConfig) -> Result<Self> {
        cfg.validate()?;
        check_dim("problem horizon", cfg.horizon, problem.horizon())?;
        let pool = build_pool(cfg.lanes)?;
        let warm_cfg = SamplerConfig {
            seed: cfg.sampler.seed ^ 0x5741_524d,
            ..cfg.sampler.clone()
        };
        Ok(Controller {
            sampler: SamplerState::new(cfg.sampler.clone()),
            warm_sampler: SamplerState::new(warm_cfg),
            problem,
            cfg,
            pool,
            initial_plan: None,
            previous: None,
            k: 0,
        })
    }

    /// Uses `plan` instead of random search on the first call.
    pub fn with_initial_plan(mut self, plan: Plan) -> Self {
        self.initial_plan = Some(plan);
        self
    }

    pub fn problem(&self) -> &Problem {
        &self.problem
    }

    pub fn config(&self) -> &SolverConfig {
        &self.cfg
    }

    /// Number of completed calls.
    pub fn step_index(&self) -> usize {
        self.k
    }

    pub fn previous(&self) -> Option<&SolveResult> {
        self.previous.as_ref()
    }

    /// Forgets the previous solution; the next call starts over.
    pub fn reset(&mut self) {
        self.previous = None;
        self.k = 0;
        self.sampler = SamplerState::new(self.cfg.sampler.clone());
        self.warm_sampler = SamplerState::new(self.warm_sampler.config().clone());
    }

    pub fn solve(&mut self, x: &StateVec) -> Result<StepOutcome> {
        let start = Instant::now();
        let mut oracle = None;
        let mut warm_start_attempts = 0;
        let result = match &self.previous {
            None => {
                let warm = match &self.initial_plan {
                    Some(plan) => plan.clone(),
                    None => {
                        let o = find_oracle(x, &self.problem, &self.cfg)?;
                        let plan = o.plan.clone();
                        oracle = Some(o);
                        plan
                    }
                };
                let mut cfg = self.cfg.clone();
                if !cfg.improve_initial {
                    cfg.samples = super::SampleSchedule::Uniform(0);
                }
                improve_plan_with_pool(x, &warm, &self.problem, &cfg, &mut self.sampler, self.pool.as_ref())?
            }
            Some(prev) => {
                let ws = make_warm_start(prev, x, &self.problem, &self.cfg, &mut self.warm_sampler, self.k)?;
                warm_start_attempts = ws.attempts;
                improve_plan_with_pool(x, &ws.plan, &self.problem, &self.cfg, &mut self.sampler, self.pool.as_ref())?
            }
        };
        self.previous = Some(result.clone());
        self.k += 1;
        Ok(StepOutcome {
            result,
            oracle,
            warm_start_attempts,
            elapsed: start.elapsed(),
        })
    }
}

/// One closed-loop sampling instant.
#[derive(Debug, Clone, PartialEq)]
pub struct StepRecord {
    pub k: usize,
    pub state: StateVec,
    pub input: InputVec,
    pub cost: f64,
    pub warm_cost: f64,
    pub f_evals: u64,
    pub cost_evals: u64,
    pub improvements: u64,
    /// Whole controller call, including initial search or warm start.
    pub elapsed: Duration,
    /// Improvement pass only.
    pub solve_elapsed: Duration,
    pub budget_hit: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Termination {
    Completed,
    Failed { k: usize, error: NmpcError },
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunLog {
    pub initial_state: StateVec,
    pub input_dim: usize,
    pub records: Vec<StepRecord>,
    /// State after the last applied input.
    pub final_state: StateVec,
    pub termination: Termination,
    pub oracle_draws: Option<usize>,
    pub oracle_f_evals: u64,
}

impl RunLog {
    /// Visited states `x_0 .. x_K`.
    pub fn states(&self) -> impl Iterator<Item = &StateVec> {
        self.records.iter().map(|r| &r.state).chain(std::iter::once(&self.final_state))
    }
}

/// Runs the controller against the nominal plant for `steps` instants.
///
/// Failures end the run early and are reported in `termination`; the records
/// up to that point are kept.
pub fn simulate(problem: Problem, cfg: SolverConfig, x0: &StateVec, steps: usize, initial_plan: Option<Plan>) -> RunLog {
    let mut log = RunLog {
        initial_state: x0.clone(),
        input_dim: problem.model.input_dim(),
        records: Vec::with_capacity(steps),
        final_state: x0.clone(),
        termination: Termination::Completed,
        oracle_draws: None,
        oracle_f_evals: 0,
    };
    if steps == 0 {
        return log;
    }
    let model = problem.model.clone();
    if let Err(error) = check_dim("initial state", model.state_dim(), x0.len()) {
        log.termination = Termination::Failed { k: 0, error };
        return log;
    }
    let mut controller = match Controller::new(problem, cfg) {
        Ok(c) => c,
        Err(error) => {
            log.termination = Termination::Failed { k: 0, error };
            return log;
        }
    };
    if let Some(plan) = initial_plan {
        controller = controller.with_initial_plan(plan);
    }
    let mut x = x0.clone();
    for k in 0..steps {
        let outcome = match controller.solve(&x) {
            Ok(o) => o,
            Err(error) => {
                log.termination = Termination::Failed { k, error };
                break;
            }
        };
        if let Some(o) = &outcome.oracle {
            log.oracle_draws = Some(o.draws);
            log.oracle_f_evals = o.f_evals;
        }
        let r = &outcome.result;
        let u = outcome.input().clone();
        let next = model.step(&x, &u);
        log.records.push(StepRecord {
            k,
            state: x,
            input: u,
            cost: r.cost,
            warm_cost: r.warm_cost,
            f_evals: r.f_evals,
            cost_evals: r.cost_evals,
            improvements: r.improvements,
            elapsed: outcome.elapsed,
            solve_elapsed: r.elapsed,
            budget_hit: r.budget_hit,
        });
        x = next;
    }
    log.final_state = x;
    log
}

/// [`simulate`], turning an early failure into an error.
pub fn closed_loop(problem: Problem, cfg: SolverConfig, x0: &StateVec, steps: usize) -> Result<RunLog> {
    let log = simulate(problem, cfg, x0, steps, None);
    match &log.termination {
        Termination::Completed => Ok(log),
        Termination::Failed { error, .. } => Err(error.clone()),
    }
}
