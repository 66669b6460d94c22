//! Benchmark plants with their published parameters, constraints and costs.

mod buck_boost;
mod cart_spring;
mod wmr;

pub use buck_boost::{
    calibrate_terminal_level, terminal_level_admissible, BuckBoost, BuckBoostParams, BUCK_TERMINAL_LEVEL,
};
pub use cart_spring::{CartSpring, CartSpringParams, CART_TERMINAL_LEVEL};
pub use wmr::{ObstacleConfig, Wmr, WmrParams};

use crate::constraints::{ConstraintSpec, EllipsoidSet};
use crate::cost::CostSpec;
use crate::error::{NmpcError, Result};
use crate::plant::{InputVec, PlantModel, StateVec};

/// A plant bundled with the constraint sets and cost weights of its experiment.
pub trait Benchmark: PlantModel {
    fn constraints(&self) -> ConstraintSpec;
    fn cost(&self, horizon: usize) -> CostSpec;
    fn default_initial_state(&self) -> StateVec;

    fn terminal_set(&self) -> Option<EllipsoidSet> {
        self.constraints().terminal
    }
}

/// The plant's terminal feedback law, or an error if it has none.
pub fn terminal_control(plant: &dyn PlantModel, x: &StateVec) -> Result<InputVec> {
    plant
        .terminal_control(x)
        .ok_or_else(|| NmpcError::NoTerminalLaw(plant.name().to_string()))
}
