//! Plant models, input plans and trajectory rollout.

use std::fmt::Debug;
use std::ops::Index;

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::error::{check_dim, NmpcError, Result};

pub type StateVec = DVector<f64>;
pub type InputVec = DVector<f64>;

/// A discrete-time plant `x⁺ = f(x, u)`.
///
/// Implementations must be pure: the same `(x, u)` always yields a
/// bit-identical successor. The solver relies on this for prefix reuse and
/// for lane-count independent results.
pub trait PlantModel: Send + Sync + Debug {
    fn name(&self) -> &str;
    fn state_dim(&self) -> usize;
    fn input_dim(&self) -> usize;
    fn step(&self, x: &StateVec, u: &InputVec) -> StateVec;

    /// The `(state, input)` pair the plant is regulated to.
    fn equilibrium(&self) -> (StateVec, InputVec);

    /// Local stabilizing law used to extend shifted plans, if the plant has one.
    fn terminal_control(&self, _x: &StateVec) -> Option<InputVec> {
        None
    }
}

/// An ordered input sequence `u_0 .. u_{N-1}` over the prediction horizon.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Plan(Vec<InputVec>);

impl Plan {
    pub fn new(inputs: Vec<InputVec>) -> Result<Self> {
        let Some(first) = inputs.first() else {
            return Err(NmpcError::Contract("a plan needs at least one input".into()));
        };
        let m = first.len();
        for u in &inputs {
            check_dim("plan input", m, u.len())?;
        }
        Ok(Plan(inputs))
    }

    /// `horizon` copies of `u`.
    pub fn constant(u: &InputVec, horizon: usize) -> Result<Self> {
        Plan::new(vec![u.clone(); horizon])
    }

    pub fn horizon(&self) -> usize {
        self.0.len()
    }

    pub fn input_dim(&self) -> usize {
        self.0[0].len()
    }

    pub fn inputs(&self) -> &[InputVec] {
        &self.0
    }

    pub fn first(&self) -> &InputVec {
        &self.0[0]
    }

    pub fn iter(&self) -> std::slice::Iter<'_, InputVec> {
        self.0.iter()
    }

    /// Copy of this plan with position `index` replaced by `u`.
    pub fn with_input(&self, index: usize, u: InputVec) -> Plan {
        let mut inputs = self.0.clone();
        inputs[index] = u;
        Plan(inputs)
    }

    pub(crate) fn set(&mut self, index: usize, u: InputVec) {
        self.0[index] = u;
    }

    pub fn into_inner(self) -> Vec<InputVec> {
        self.0
    }
}

impl Index<usize> for Plan {
    type Output = InputVec;

    fn index(&self, index: usize) -> &InputVec {
        &self.0[index]
    }
}

/// Predicted states `x_0 .. x_N` of a plan applied from `x_0`.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory(Vec<StateVec>);

impl Trajectory {
    pub(crate) fn from_states(states: Vec<StateVec>) -> Self {
        Trajectory(states)
    }

    pub fn states(&self) -> &[StateVec] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn terminal(&self) -> &StateVec {
        self.0.last().expect("trajectory holds at least the initial state")
    }
}

impl Index<usize> for Trajectory {
    type Output = StateVec;

    fn index(&self, index: usize) -> &StateVec {
        &self.0[index]
    }
}

/// Applies `plan` to `model` starting from `x0`.
pub fn rollout(model: &dyn PlantModel, x0: &StateVec, plan: &Plan) -> Result<Trajectory> {
    check_dim("rollout initial state", model.state_dim(), x0.len())?;
    check_dim("rollout input", model.input_dim(), plan.input_dim())?;
    let mut states = Vec::with_capacity(plan.horizon() + 1);
    states.push(x0.clone());
    for u in plan.iter() {
        let next = model.step(states.last().unwrap(), u);
        states.push(next);
    }
    Ok(Trajectory(states))
}

/// Receding-horizon shift: drops the first input and appends `appended`.
pub fn shift_plan(prev: &Plan, appended: InputVec) -> Result<Plan> {
    if prev.horizon() == 0 {
        return Err(NmpcError::Contract("cannot shift an empty plan".into()));
    }
    check_dim("shift append", prev.input_dim(), appended.len())?;
    let mut inputs: Vec<InputVec> = prev.0[1..].to_vec();
    inputs.push(appended);
    Ok(Plan(inputs))
}
