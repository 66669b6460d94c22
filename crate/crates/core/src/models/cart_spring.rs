use nalgebra::{dmatrix, dvector, DMatrix};
use serde::{Deserialize, Serialize};

use super::Benchmark;
use crate::constraints::{BoxSet, ConstraintSpec, EllipsoidSet};
use crate::cost::CostSpec;
use crate::plant::{InputVec, PlantModel, StateVec};

/// Sublevel of `V_f` bounding the terminal set.
pub const CART_TERMINAL_LEVEL: f64 = 4.7;

const FORCE_LIMIT: f64 = 4.5;
const DISPLACEMENT_LIMIT: f64 = 2.65;
const TERMINAL_GAIN: [f64; 2] = [0.8783, 1.1204];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CartSpringParams {
    /// Sampling period [s].
    pub ts: f64,
    /// Spring stiffness scale.
    pub rho0: f64,
    pub mass: f64,
    /// Damping.
    pub h_d: f64,
}

impl Default for CartSpringParams {
    fn default() -> Self {
        CartSpringParams {
            ts: 0.4,
            rho0: 0.33,
            mass: 1.0,
            h_d: 1.1,
        }
    }
}

/// Cart on a wall spring whose stiffness decays with displacement.
///
/// `x = (displacement, velocity)`, `u = force`.
#[derive(Debug, Clone, Default)]
pub struct CartSpring {
    params: CartSpringParams,
}

impl CartSpring {
    pub fn new(params: CartSpringParams) -> Self {
        CartSpring { params }
    }

    pub fn params(&self) -> &CartSpringParams {
        &self.params
    }

    /// Autonomous part of the dynamics.
    pub fn drift(&self, x: &StateVec) -> StateVec {
        let p = &self.params;
        dvector![
            x[0] + p.ts * x[1],
            x[1] - p.ts * (p.rho0 / p.mass) * (-x[0]).exp() * x[0] - p.ts * (p.h_d / p.mass) * x[1]
        ]
    }

    pub fn terminal_weight() -> DMatrix<f64> {
        dmatrix![7.0814, 3.3708; 3.3708, 4.2998]
    }
}

impl PlantModel for CartSpring {
    fn name(&self) -> &str {
        "cart_spring"
    }

    fn state_dim(&self) -> usize {
        2
    }

    fn input_dim(&self) -> usize {
        1
    }

    fn step(&self, x: &StateVec, u: &InputVec) -> StateVec {
        let mut next = self.drift(x);
        next[1] += (self.params.ts / self.params.mass) * u[0];
        next
    }

    fn equilibrium(&self) -> (StateVec, InputVec) {
        (dvector![0.0, 0.0], dvector![0.0])
    }

    /// `u = -K f_1(x)`.
    fn terminal_control(&self, x: &StateVec) -> Option<InputVec> {
        let f1 = self.drift(x);
        Some(dvector![-(TERMINAL_GAIN[0] * f1[0] + TERMINAL_GAIN[1] * f1[1])])
    }
}

impl Benchmark for CartSpring {
    fn constraints(&self) -> ConstraintSpec {
        let terminal =
            EllipsoidSet::new(dvector![0.0, 0.0], Self::terminal_weight(), CART_TERMINAL_LEVEL)
                .expect("published terminal weight is positive definite");
        ConstraintSpec::new(
            BoxSet::new(vec![-DISPLACEMENT_LIMIT, f64::NEG_INFINITY], vec![DISPLACEMENT_LIMIT, f64::INFINITY])
                .unwrap(),
            BoxSet::new(vec![-FORCE_LIMIT], vec![FORCE_LIMIT]).unwrap(),
            Vec::new(),
            Some(terminal),
        )
        .unwrap()
    }

    fn cost(&self, horizon: usize) -> CostSpec {
        CostSpec::constant(
            DMatrix::identity(2, 2),
            DMatrix::identity(1, 1),
            Self::terminal_weight(),
            horizon,
            dvector![0.0, 0.0],
            dvector![0.0],
        )
        .expect("published cart weights are valid")
    }

    fn default_initial_state(&self) -> StateVec {
        dvector![-2.5, 3.0]
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::terminal_control;

    #[test]
    fn step_examples() {
        let cart = CartSpring::default();
        assert_eq!(cart.step(&dvector![0.0, 0.0], &dvector![0.0]), dvector![0.0, 0.0]);
        let x = cart.step(&dvector![1.0, 0.0], &dvector![0.0]);
        assert!((x[1] + 0.132 * (-1.0f64).exp()).abs() < 1e-15);
        assert!((x[1] + 0.048566).abs() < 1e-5);
        let x = cart.step(&dvector![0.0, 0.0], &dvector![1.0]);
        assert!((x - dvector![0.0, 0.4]).amax() < 1e-15);
    }

    #[test]
    fn terminal_law_examples() {
        let cart = CartSpring::default();
        assert_eq!(terminal_control(&cart, &dvector![0.0, 0.0]).unwrap(), dvector![0.0]);
        let u = terminal_control(&cart, &dvector![1.0, 0.0]).unwrap();
        let expected = -(0.8783 - 1.1204 * 0.132 * (-1.0f64).exp());
        assert!((u[0] - expected).abs() < 1e-12);
        assert!((u[0] + 0.823886).abs() < 1e-5);
    }

    #[test]
    fn terminal_set_membership() {
        let set = CartSpring::default().terminal_set().unwrap();
        assert!(set.contains(&dvector![0.0, 0.0]));
        assert!((set.value(&dvector![1.0, 0.0]) - 7.0814).abs() < 1e-12);
        assert!(!set.contains(&dvector![1.0, 0.0]));
    }
}
