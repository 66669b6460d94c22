use nalgebra::{dvector, DMatrix};
use serde::{Deserialize, Serialize};

use super::Benchmark;
use crate::constraints::{BoxSet, ConstraintSpec, ObstacleSet};
use crate::cost::CostSpec;
use crate::plant::{InputVec, PlantModel, StateVec};

const SPEED_LIMIT: f64 = 0.47;
const TURN_RATE_LIMIT: f64 = 3.77;

/// Disc obstacle on the `(x1, x2)` plane.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ObstacleConfig {
    pub center: [f64; 2],
    pub radius: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct WmrParams {
    /// Sampling period [s].
    pub ts: f64,
    /// Benchmark obstacle between the start pose and the goal. Not a published
    /// geometry; `null` removes it.
    pub obstacle: Option<ObstacleConfig>,
}

impl Default for WmrParams {
    fn default() -> Self {
        WmrParams {
            ts: 0.1,
            obstacle: Some(ObstacleConfig {
                center: [0.0, 3.0],
                radius: 1.0,
            }),
        }
    }
}

/// Unicycle kinematics: `x = (x1, x2, heading)`, `u = (speed, turn rate)`.
#[derive(Debug, Clone, Default)]
pub struct Wmr {
    params: WmrParams,
}

impl Wmr {
    pub fn new(params: WmrParams) -> Self {
        Wmr { params }
    }

    pub fn params(&self) -> &WmrParams {
        &self.params
    }

    fn base_weight() -> DMatrix<f64> {
        DMatrix::from_diagonal(&dvector![1.0, 1.0, 0.5])
    }
}

impl PlantModel for Wmr {
    fn name(&self) -> &str {
        "wmr"
    }

    fn state_dim(&self) -> usize {
        3
    }

    fn input_dim(&self) -> usize {
        2
    }

    fn step(&self, x: &StateVec, u: &InputVec) -> StateVec {
        let ts = self.params.ts;
        dvector![
            x[0] + u[0] * x[2].cos() * ts,
            x[1] + u[0] * x[2].sin() * ts,
            x[2] + u[1] * ts
        ]
    }

    fn equilibrium(&self) -> (StateVec, InputVec) {
        (dvector![0.0, 0.0, 0.0], dvector![0.0, 0.0])
    }
}

impl Benchmark for Wmr {
    fn constraints(&self) -> ConstraintSpec {
        let obstacles = self
            .params
            .obstacle
            .map(|o| ObstacleSet::new(o.center, o.radius, [0, 1]).expect("obstacle radius must be positive"))
            .into_iter()
            .collect();
        ConstraintSpec::new(
            BoxSet::unbounded(3),
            BoxSet::new(vec![-SPEED_LIMIT, -TURN_RATE_LIMIT], vec![SPEED_LIMIT, TURN_RATE_LIMIT]).unwrap(),
            obstacles,
            None,
        )
        .unwrap()
    }

    /// No weight on the current state, `Q_j = 2^(j-1) Q` afterwards and
    /// `P = 50 Q_N`.
    fn cost(&self, horizon: usize) -> CostSpec {
        let q = Self::base_weight();
        let stage_state = (0..horizon)
            .map(|j| if j == 0 { DMatrix::zeros(3, 3) } else { &q * 2f64.powi(j as i32 - 1) })
            .collect();
        let stage_input = vec![DMatrix::from_diagonal(&dvector![0.1, 0.1]); horizon];
        let terminal = &q * (50.0 * 2f64.powi(horizon as i32 - 1));
        CostSpec::new(stage_state, stage_input, terminal, dvector![0.0, 0.0, 0.0], dvector![0.0, 0.0])
            .expect("published robot weights are valid")
    }

    fn default_initial_state(&self) -> StateVec {
        dvector![0.0, 6.0, 0.0]
    }
}
