//! Quadratic stage and terminal costs.

use nalgebra::{DMatrix, DVector};

use crate::constraints::is_symmetric;
use crate::error::{check_dim, NmpcError, Result};
use crate::plant::{InputVec, Plan, StateVec, Trajectory};

/// `J = Σ_j (x_j-x_r)ᵀQ_j(x_j-x_r) + (u_j-u_r)ᵀR_j(u_j-u_r) + (x_N-x_r)ᵀP(x_N-x_r)`.
#[derive(Debug, Clone, PartialEq)]
pub struct CostSpec {
    stage_state: Vec<DMatrix<f64>>,
    stage_input: Vec<DMatrix<f64>>,
    terminal: DMatrix<f64>,
    state_ref: StateVec,
    input_ref: InputVec,
}

impl CostSpec {
    /// Time-varying weights, one `(Q_j, R_j)` per horizon position.
    pub fn new(
        stage_state: Vec<DMatrix<f64>>,
        stage_input: Vec<DMatrix<f64>>,
        terminal: DMatrix<f64>,
        state_ref: StateVec,
        input_ref: InputVec,
    ) -> Result<Self> {
        check_dim("stage weight count", stage_state.len(), stage_input.len())?;
        if stage_state.is_empty() {
            return Err(NmpcError::Contract("cost needs a horizon of at least one".into()));
        }
        let n = state_ref.len();
        let m = input_ref.len();
        for q in &stage_state {
            check_square("Q_j", q, n)?;
            if q.symmetric_eigenvalues().min() < -1e-12 {
                return Err(NmpcError::Contract("Q_j must be positive semidefinite".into()));
            }
        }
        for r in &stage_input {
            check_square("R_j", r, m)?;
            if r.clone().cholesky().is_none() {
                return Err(NmpcError::Contract("R_j must be positive definite".into()));
            }
        }
        check_square("P", &terminal, n)?;
        if terminal.clone().cholesky().is_none() {
            return Err(NmpcError::Contract("P must be positive definite".into()));
        }
        Ok(CostSpec {
            stage_state,
            stage_input,
            terminal,
            state_ref,
            input_ref,
        })
    }

    /// Constant `Q`, `R` over `horizon` steps.
    pub fn constant(
        q: DMatrix<f64>,
        r: DMatrix<f64>,
        p: DMatrix<f64>,
        horizon: usize,
        state_ref: StateVec,
        input_ref: InputVec,
    ) -> Result<Self> {
        CostSpec::new(vec![q; horizon], vec![r; horizon], p, state_ref, input_ref)
    }

    pub fn horizon(&self) -> usize {
        self.stage_state.len()
    }

    pub fn state_ref(&self) -> &StateVec {
        &self.state_ref
    }

    pub fn input_ref(&self) -> &InputVec {
        &self.input_ref
    }

    pub fn stage_state_weight(&self, j: usize) -> &DMatrix<f64> {
        &self.stage_state[j]
    }

    pub fn terminal_weight(&self) -> &DMatrix<f64> {
        &self.terminal
    }

    /// Stage cost at horizon position `j`.
    pub fn stage(&self, j: usize, x: &StateVec, u: &InputVec) -> f64 {
        quad(&self.stage_state[j], &(x - &self.state_ref))
            + quad(&self.stage_input[j], &(u - &self.input_ref))
    }

    pub fn terminal_cost(&self, x: &StateVec) -> f64 {
        quad(&self.terminal, &(x - &self.state_ref))
    }
}

fn check_square(name: &str, m: &DMatrix<f64>, dim: usize) -> Result<()> {
    if m.nrows() != dim || m.ncols() != dim {
        return Err(NmpcError::Contract(format!(
            "{name} is {}x{}, expected {dim}x{dim}",
            m.nrows(),
            m.ncols()
        )));
    }
    if !is_symmetric(m) {
        return Err(NmpcError::Contract(format!("{name} is not symmetric")));
    }
    Ok(())
}

fn quad(m: &DMatrix<f64>, d: &DVector<f64>) -> f64 {
    d.dot(&(m * d))
}

/// Total cost of `plan` along its predicted trajectory.
///
/// Stage terms are accumulated in horizon order and the terminal term is added
/// last; the solver's incremental evaluation uses the same order so both give
/// bit-identical values.
pub fn evaluate_cost(cost: &CostSpec, traj: &Trajectory, plan: &Plan) -> Result<f64> {
    check_dim("trajectory length", plan.horizon() + 1, traj.len())?;
    check_dim("cost horizon", cost.horizon(), plan.horizon())?;
    check_dim("cost state", cost.state_ref.len(), traj[0].len())?;
    check_dim("cost input", cost.input_ref.len(), plan.input_dim())?;
    let mut total = 0.0;
    for (j, u) in plan.iter().enumerate() {
        total += cost.stage(j, &traj[j], u);
    }
    Ok(total + cost.terminal_cost(traj.terminal()))
}
