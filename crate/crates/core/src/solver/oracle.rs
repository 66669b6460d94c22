use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{Problem, SolverConfig};
use crate::error::{check_dim, NmpcError, Result};
use crate::plant::{InputVec, Plan, StateVec};

/// Keystream used for initial-plan draws, separate from the sampler's.
const ORACLE_STREAM: u64 = 0x6f72_6163_6c65;

/// A feasible initial plan found by random search.
#[derive(Debug, Clone, PartialEq)]
pub struct OracleOutcome {
    pub plan: Plan,
    /// Full sequences drawn, including the accepted one.
    pub draws: usize,
    /// Plant steps spent, with rollouts abandoned at the first violation.
    pub f_evals: u64,
}

/// Draws uniform input sequences from `U^N` until one is feasible from `x`.
///
/// Deterministic in `cfg.sampler.seed`; tries at most `cfg.oracle_budget`
/// sequences.
pub fn find_oracle(x: &StateVec, problem: &Problem, cfg: &SolverConfig) -> Result<OracleOutcome> {
    let budget = cfg.oracle_budget;
    if budget == 0 {
        return Err(NmpcError::NoOracle { budget });
    }
    let model = problem.model.as_ref();
    let constraints = &problem.constraints;
    check_dim("oracle state", model.state_dim(), x.len())?;
    let bounds = &constraints.input_box;
    if let Some(coordinate) = bounds.first_unbounded() {
        return Err(NmpcError::UnboundedBox { coordinate });
    }
    let horizon = cfg.horizon;
    let m = model.input_dim();

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.sampler.seed);
    rng.set_stream(ORACLE_STREAM);
    let mut f_evals = 0u64;
    // no sequence can repair an inadmissible current state
    if constraints.state_violation(x, false).is_some() {
        return Err(NmpcError::NoOracle { budget });
    }
    for draw in 1..=budget {
        let inputs: Vec<InputVec> = (0..horizon)
            .map(|_| {
                InputVec::from_iterator(
                    m,
                    (0..m).map(|c| {
                        let (lo, hi) = (bounds.lower()[c], bounds.upper()[c]);
                        (lo + (hi - lo) * rng.random::<f64>()).clamp(lo, hi)
                    }),
                )
            })
            .collect();
        let mut state = x.clone();
        let mut feasible = true;
        for (i, u) in inputs.iter().enumerate() {
            state = model.step(&state, u);
            f_evals += 1;
            if constraints.state_violation(&state, i + 1 == horizon).is_some() {
                feasible = false;
                break;
            }
        }
        if feasible {
            return Ok(OracleOutcome {
                plan: Plan::new(inputs)?,
                draws: draw,
                f_evals,
            });
        }
    }
    Err(NmpcError::NoOracle { budget })
}
