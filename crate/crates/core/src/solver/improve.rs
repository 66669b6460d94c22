use std::time::Instant;

use rayon::prelude::*;
use rayon::ThreadPool;

use super::{Problem, SolveResult, SolverConfig};
use crate::constraints::check_feasible;
use crate::error::{check_dim, NmpcError, Result};
use crate::plant::{rollout, InputVec, Plan, StateVec, Trajectory};
use crate::sampling::{draw_samples, SamplerState};

/// The current best plan with its predicted states and running stage-cost sums.
///
/// `prefix[i]` is the stage cost of positions `0 .. i`. During the backward
/// sweep only entries at or before the current position are read, and those
/// never change when a later position is replaced.
struct Reference {
    plan: Plan,
    states: Vec<StateVec>,
    prefix: Vec<f64>,
    cost: f64,
}

struct Candidate {
    cost: f64,
    suffix: Vec<StateVec>,
}

#[derive(Default)]
struct Outcome {
    f_evals: u64,
    cost_evals: u64,
    skipped: bool,
    accepted: Option<Candidate>,
}

/// Improves a feasible warm start with one backward sweep over the horizon.
///
/// Builds a temporary thread pool when `cfg.lanes > 1`; long-running callers
/// should hold a pool and use [`improve_plan_with_pool`].
pub fn improve_plan(
    x: &StateVec,
    warm: &Plan,
    problem: &Problem,
    cfg: &SolverConfig,
    sampler: &mut SamplerState,
) -> Result<SolveResult> {
    let pool = build_pool(cfg.lanes)?;
    improve_plan_with_pool(x, warm, problem, cfg, sampler, pool.as_ref())
}

pub(crate) fn build_pool(lanes: usize) -> Result<Option<ThreadPool>> {
    if lanes <= 1 {
        return Ok(None);
    }
    rayon::ThreadPoolBuilder::new()
        .num_threads(lanes)
        .build()
        .map(Some)
        .map_err(|e| NmpcError::Contract(format!("cannot start {lanes} lanes: {e}")))
}

pub fn improve_plan_with_pool(
    x: &StateVec,
    warm: &Plan,
    problem: &Problem,
    cfg: &SolverConfig,
    sampler: &mut SamplerState,
    pool: Option<&ThreadPool>,
) -> Result<SolveResult> {
    let start = Instant::now();
    let deadline = cfg.time_budget.map(|b| start + b);
    cfg.validate()?;
    let horizon = warm.horizon();
    check_dim("warm start horizon", cfg.horizon, horizon)?;
    check_dim("cost horizon", problem.horizon(), horizon)?;
    let samples = cfg.samples.per_step(horizon)?;

    let traj = rollout(problem.model.as_ref(), x, warm)?;
    let report = check_feasible(&problem.constraints, &traj, warm, 0)?;
    if !report.feasible {
        return Err(NmpcError::InfeasibleWarmStart(report));
    }

    let states = traj.states().to_vec();
    let mut prefix = Vec::with_capacity(horizon + 1);
    prefix.push(0.0);
    for (j, u) in warm.iter().enumerate() {
        prefix.push(prefix[j] + problem.cost.stage(j, &states[j], u));
    }
    let warm_cost = prefix[horizon] + problem.cost.terminal_cost(&states[horizon]);
    let mut reference = Reference {
        plan: warm.clone(),
        states,
        prefix,
        cost: warm_cost,
    };

    let mut f_evals = 0u64;
    let mut cost_evals = 0u64;
    let mut improvements = 0u64;
    let mut budget_hit = false;
    let mut remaining = cfg.candidate_budget;
    let mut sweep_costs = Vec::with_capacity(horizon);

    for j in (0..horizon).rev() {
        if samples[j] == 0 {
            sweep_costs.push(reference.cost);
            continue;
        }
        if deadline.is_some_and(|d| Instant::now() >= d) || remaining == Some(0) {
            budget_hit = true;
            break;
        }
        let drawn = draw_samples(sampler, &problem.constraints.input_box, samples[j])?;
        let allowed = remaining.map_or(drawn.len(), |r| r.min(drawn.len()));
        if allowed < drawn.len() {
            budget_hit = true;
        }
        if let Some(r) = remaining.as_mut() {
            *r -= allowed;
        }

        let evaluate = |u: &InputVec| -> Outcome {
            if deadline.is_some_and(|d| Instant::now() >= d) {
                return Outcome {
                    skipped: true,
                    ..Outcome::default()
                };
            }
            evaluate_candidate(problem, &reference, j, u, cfg.pruning)
        };
        let outcomes: Vec<Outcome> = match pool {
            Some(pool) => pool.install(|| drawn[..allowed].par_iter().map(evaluate).collect()),
            None => {
                let mut out = Vec::with_capacity(allowed);
                for u in &drawn[..allowed] {
                    let o = evaluate(u);
                    let stop = o.skipped;
                    out.push(o);
                    if stop {
                        break;
                    }
                }
                out
            }
        };

        // strict improvement over the snapshot; the earliest sample wins ties
        let mut best: Option<(usize, Candidate)> = None;
        let mut skipped = false;
        for (q, o) in outcomes.into_iter().enumerate() {
            f_evals += o.f_evals;
            cost_evals += o.cost_evals;
            skipped |= o.skipped;
            if let Some(c) = o.accepted {
                let bar = best.as_ref().map_or(reference.cost, |(_, b)| b.cost);
                if c.cost < bar {
                    best = Some((q, c));
                }
            }
        }
        if let Some((q, c)) = best {
            reference.plan.set(j, drawn[q].clone());
            for (offset, s) in c.suffix.into_iter().enumerate() {
                reference.states[j + 1 + offset] = s;
            }
            reference.cost = c.cost;
            improvements += 1;
        }
        sweep_costs.push(reference.cost);
        if skipped {
            budget_hit = true;
            break;
        }
    }

    Ok(SolveResult {
        plan: reference.plan,
        trajectory: Trajectory::from_states(reference.states),
        cost: reference.cost,
        warm_cost,
        f_evals,
        cost_evals,
        improvements,
        elapsed: start.elapsed(),
        budget_hit,
        sweep_costs,
    })
}

/// Rolls the reference forward from position `j` with input `u` at `j`.
///
/// With pruning the rollout stops at the first inadmissible state and no cost
/// evaluation is counted; without it every candidate costs `N - j` plant steps
/// and one cost evaluation.
fn evaluate_candidate(problem: &Problem, reference: &Reference, j: usize, u: &InputVec, pruning: bool) -> Outcome {
    let horizon = reference.plan.horizon();
    let constraints = &problem.constraints;
    let mut feasible = constraints.input_admissible(u);
    if !feasible && pruning {
        return Outcome::default();
    }
    let mut outcome = Outcome::default();
    let mut suffix: Vec<StateVec> = Vec::with_capacity(horizon - j);
    let mut total = reference.prefix[j];
    for i in j..horizon {
        let ui = if i == j { u } else { &reference.plan[i] };
        let x = suffix.last().unwrap_or(&reference.states[j]);
        total += problem.cost.stage(i, x, ui);
        let next = problem.model.step(x, ui);
        outcome.f_evals += 1;
        if constraints.state_violation(&next, i + 1 == horizon).is_some() {
            feasible = false;
            if pruning {
                return outcome;
            }
        }
        suffix.push(next);
    }
    total += problem.cost.terminal_cost(suffix.last().expect("j < horizon"));
    outcome.cost_evals = 1;
    if feasible {
        outcome.accepted = Some(Candidate { cost: total, suffix });
    }
    outcome
}
