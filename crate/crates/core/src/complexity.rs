//! Operation-count model of one improvement pass and its parallel bounds.
//!
//! `c1` is the cost of one plant step plus its membership test, `c2` the cost
//! of one full cost evaluation. Comparisons and reference updates are free.

use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::constraints::ConstraintSpec;
use crate::cost::{evaluate_cost, CostSpec};
use crate::plant::{rollout, Plan, PlantModel, StateVec};
use crate::solver::SolveResult;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CostModel {
    pub c1: f64,
    pub c2: f64,
}

impl CostModel {
    /// Abstract operation units.
    pub const UNIT: CostModel = CostModel { c1: 1.0, c2: 1.0 };
}

impl Default for CostModel {
    fn default() -> Self {
        CostModel::UNIT
    }
}

/// `Σ (N-j) n_j`: plant steps of one pass without pruning.
pub fn step_count(samples: &[usize]) -> u64 {
    let horizon = samples.len();
    samples
        .iter()
        .enumerate()
        .map(|(j, &n)| ((horizon - j) * n) as u64)
        .sum()
}

/// `Σ n_j`: cost evaluations of one pass without pruning.
pub fn cost_eval_count(samples: &[usize]) -> u64 {
    samples.iter().map(|&n| n as u64).sum()
}

/// Exact serial work `c1 Σ(N-j) n_j + c2 Σ n_j`; `samples` has one entry per
/// horizon position.
pub fn predicted_serial(samples: &[usize], model: CostModel) -> f64 {
    model.c1 * step_count(samples) as f64 + model.c2 * cost_eval_count(samples) as f64
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ComplexityReport {
    /// Exact serial work for the given `n_j`.
    pub serial_exact: f64,
    /// Serial bound with every `n_j ≤ n̄`.
    pub serial_bound: f64,
    /// Bound with `n̄` lanes.
    pub full_parallel: f64,
    /// Bound with `p` lanes.
    pub p_parallel: f64,
    pub measured_f_evals: Option<u64>,
    pub measured_cost_evals: Option<u64>,
}

/// The three closed-form bounds for `n̄` samples per step and `lanes` lanes.
///
/// Returns `(serial_bound, full_parallel, p_parallel)`.
pub fn predicted_bounds(n_bar: usize, horizon: usize, model: CostModel, lanes: usize) -> (f64, f64, f64) {
    // integer counts first, so the bound equals the exact count bit for bit
    // when every n_j = n̄
    let triangle = (horizon * (horizon + 1) / 2) as u64;
    let per_round = model.c1 * triangle as f64 + model.c2 * horizon as f64;
    let serial_bound = model.c1 * (n_bar as u64 * triangle) as f64 + model.c2 * (horizon as u64 * n_bar as u64) as f64;
    let rounds = n_bar.div_ceil(lanes.max(1));
    (serial_bound, per_round, rounds as f64 * per_round)
}

/// Full report for one pass with per-step sample counts `samples`.
pub fn predict(samples: &[usize], model: CostModel, lanes: usize) -> ComplexityReport {
    let n_bar = samples.iter().copied().max().unwrap_or(0);
    let (serial_bound, full_parallel, p_parallel) = predicted_bounds(n_bar, samples.len(), model, lanes);
    ComplexityReport {
        serial_exact: predicted_serial(samples, model),
        serial_bound,
        full_parallel,
        p_parallel,
        measured_f_evals: None,
        measured_cost_evals: None,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CounterComparison {
    pub f_eval_ratio: f64,
    pub cost_eval_ratio: f64,
    /// Measured counters disagree with the loop-structure counts although
    /// pruning was off and the pass ran to completion.
    pub violation: bool,
}

/// Compares measured counters of one pass against the predicted counts.
pub fn compare(measured: &SolveResult, samples: &[usize], pruning: bool) -> CounterComparison {
    let expected_steps = step_count(samples);
    let expected_costs = cost_eval_count(samples);
    let ratio = |got: u64, want: u64| if want == 0 { if got == 0 { 1.0 } else { f64::INFINITY } } else { got as f64 / want as f64 };
    let exact = measured.f_evals == expected_steps && measured.cost_evals == expected_costs;
    let within = measured.f_evals <= expected_steps && measured.cost_evals <= expected_costs;
    CounterComparison {
        f_eval_ratio: ratio(measured.f_evals, expected_steps),
        cost_eval_ratio: ratio(measured.cost_evals, expected_costs),
        violation: if pruning || measured.budget_hit { !within } else { !exact },
    }
}

/// Wall-clock estimates of `c1` and `c2` in seconds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Calibration {
    pub c1_seconds: f64,
    pub c2_seconds: f64,
    pub repetitions: usize,
}

/// Median time of one plant step plus membership test, and of one full cost
/// evaluation of `plan`, over `repetitions ≥ 1000` batches.
pub fn calibrate(
    model: &dyn PlantModel,
    constraints: &ConstraintSpec,
    cost: &CostSpec,
    x: &StateVec,
    plan: &Plan,
    repetitions: usize,
) -> Calibration {
    let repetitions = repetitions.max(1000);
    const BATCH: u32 = 16;
    let traj = rollout(model, x, plan).expect("calibration inputs must have matching dimensions");
    let median = |mut v: Vec<f64>| {
        v.sort_by(f64::total_cmp);
        v[v.len() / 2]
    };
    let mut step_times = Vec::with_capacity(repetitions);
    let mut cost_times = Vec::with_capacity(repetitions);
    let mut sink = 0.0;
    for _ in 0..repetitions {
        let start = Instant::now();
        for _ in 0..BATCH {
            let next = model.step(std::hint::black_box(x), &plan[0]);
            if constraints.state_violation(&next, false).is_none() {
                sink += next[0];
            }
        }
        step_times.push(start.elapsed().as_secs_f64() / BATCH as f64);

        let start = Instant::now();
        for _ in 0..BATCH {
            sink += evaluate_cost(cost, std::hint::black_box(&traj), plan).unwrap_or(0.0);
        }
        cost_times.push(start.elapsed().as_secs_f64() / BATCH as f64);
    }
    std::hint::black_box(sink);
    Calibration {
        c1_seconds: median(step_times),
        c2_seconds: median(cost_times),
        repetitions,
    }
}
