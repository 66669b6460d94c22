use super::{Problem, SolveResult, SolverConfig, WarmStartMode};
use crate::constraints::check_feasible;
use crate::error::{NmpcError, Result};
use crate::models::terminal_control;
use crate::plant::{rollout, shift_plan, InputVec, Plan, StateVec};
use crate::sampling::{draw_samples, SamplerScheme, SamplerState};

const SAMPLE_BATCH: usize = 32;

/// A certified-feasible shifted plan.
#[derive(Debug, Clone, PartialEq)]
pub struct WarmStart {
    pub plan: Plan,
    /// Candidate appends tried, including the accepted one.
    pub attempts: usize,
}

/// Shifts the previous plan and appends one input so that the result is
/// feasible from `x_new`.
///
/// In terminal-controller mode the first candidate is the terminal law at the
/// previous predicted end state. Sampled appends follow (the equilibrium input
/// first, then draws from `sampler`) until `cfg.warm_start_budget` candidates
/// have been tried. `k` only labels the error.
pub fn make_warm_start(
    prev: &SolveResult,
    x_new: &StateVec,
    problem: &Problem,
    cfg: &SolverConfig,
    sampler: &mut SamplerState,
    k: usize,
) -> Result<WarmStart> {
    let model = problem.model.as_ref();
    let budget = cfg.warm_start_budget.max(1);
    let mut attempts = 0usize;
    let try_append = |u: InputVec| -> Result<Option<Plan>> {
        let plan = shift_plan(&prev.plan, u)?;
        let traj = rollout(model, x_new, &plan)?;
        Ok(check_feasible(&problem.constraints, &traj, &plan, 0)?
            .feasible
            .then_some(plan))
    };

    if cfg.warm_start == WarmStartMode::TerminalController {
        let u = terminal_control(model, prev.trajectory.terminal())?;
        attempts += 1;
        if let Some(plan) = try_append(u)? {
            return Ok(WarmStart { plan, attempts });
        }
    }

    let (_, u_eq) = model.equilibrium();
    attempts += 1;
    if let Some(plan) = try_append(u_eq)? {
        return Ok(WarmStart { plan, attempts });
    }

    let bounds = &problem.constraints.input_box;
    while attempts < budget {
        let want = budget - attempts;
        // a grid restarts at the same points on every call, so take it whole
        let batch = if sampler.config().scheme == SamplerScheme::Grid { want } else { want.min(SAMPLE_BATCH) };
        for u in draw_samples(sampler, bounds, batch)? {
            attempts += 1;
            if let Some(plan) = try_append(u)? {
                return Ok(WarmStart { plan, attempts });
            }
        }
    }
    Err(NmpcError::WarmStartFailure { k, attempts })
}
