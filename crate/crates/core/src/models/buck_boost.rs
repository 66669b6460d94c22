use std::f64::consts::TAU;

use nalgebra::{dmatrix, dvector, DMatrix, Matrix2, Vector2};
use serde::{Deserialize, Serialize};

use super::Benchmark;
use crate::constraints::{BoxSet, ConstraintSpec, EllipsoidSet};
use crate::cost::CostSpec;
use crate::plant::{InputVec, PlantModel, StateVec};

/// Terminal-set level shipped with the converter model.
///
/// Output of [`calibrate_terminal_level`] with default parameters and 10⁴
/// boundary points (7.5435…), truncated to three significant digits.
/// Regenerate with `cargo run --example calibrate_buck_level`.
pub const BUCK_TERMINAL_LEVEL: f64 = 7.54;

const EQ_STATE: [f64; 2] = [20.0, 0.5];
const EQ_INPUT: [f64; 2] = [0.81, 0.4];
const GAIN: [[f64; 2]; 2] = [[-0.0014, -0.3246], [0.0001, -0.0055]];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BuckBoostParams {
    /// Inductor series resistance [Ω].
    pub r_l: f64,
    /// Output capacitance [F].
    pub c_f: f64,
    /// Filter inductance [H].
    pub l_f: f64,
    /// Sampling period [s].
    pub ts: f64,
    /// Source voltage [V]. Chosen so the published equilibrium is a fixed point.
    pub v_s: f64,
    /// Load resistance [Ω]. Chosen so the published equilibrium is a fixed point.
    pub r_h: f64,
    /// Level of the terminal ellipsoid around the equilibrium.
    pub terminal_level: f64,
    /// Impose the terminal ellipsoid as a constraint on the horizon end.
    pub terminal_constraint: bool,
}

impl Default for BuckBoostParams {
    fn default() -> Self {
        BuckBoostParams {
            r_l: 0.2,
            c_f: 22e-6,
            l_f: 220e-6,
            ts: 10e-6,
            v_s: 10.0,
            r_h: 100.0,
            terminal_level: BUCK_TERMINAL_LEVEL,
            terminal_constraint: true,
        }
    }
}

/// Bilinear averaged model of a buck-boost converter.
///
/// `x = (v_C, i_L)`, `u = (d_1, d_2)` duty cycles;
/// `x⁺ = A x + B u + [xᵀC₁ u; xᵀC₂ u]`.
#[derive(Debug, Clone)]
pub struct BuckBoost {
    params: BuckBoostParams,
    a: Matrix2<f64>,
    b: Matrix2<f64>,
    c1: Matrix2<f64>,
    c2: Matrix2<f64>,
}

impl Default for BuckBoost {
    fn default() -> Self {
        BuckBoost::new(BuckBoostParams::default())
    }
}

impl BuckBoost {
    pub fn new(params: BuckBoostParams) -> Self {
        let p = &params;
        let a = Matrix2::identity()
            + Matrix2::new(-1.0 / (p.r_h * p.c_f), 0.0, 0.0, -p.r_l / p.l_f) * p.ts;
        let b = Matrix2::new(0.0, 0.0, p.v_s / p.l_f, 0.0) * p.ts;
        let c1 = Matrix2::new(0.0, 0.0, 0.0, 1.0 / p.c_f) * p.ts;
        let c2 = Matrix2::new(0.0, -1.0 / p.l_f, 0.0, 0.0) * p.ts;
        BuckBoost { params, a, b, c1, c2 }
    }

    pub fn params(&self) -> &BuckBoostParams {
        &self.params
    }

    pub fn terminal_weight() -> DMatrix<f64> {
        dmatrix![46.6617, 42.8039; 42.8039, 69.4392]
    }

    fn linear_feedback(&self, x: &StateVec) -> InputVec {
        let dx = [x[0] - EQ_STATE[0], x[1] - EQ_STATE[1]];
        dvector![
            EQ_INPUT[0] + GAIN[0][0] * dx[0] + GAIN[0][1] * dx[1],
            EQ_INPUT[1] + GAIN[1][0] * dx[0] + GAIN[1][1] * dx[1]
        ]
    }
}

impl PlantModel for BuckBoost {
    fn name(&self) -> &str {
        "buck_boost"
    }

    fn state_dim(&self) -> usize {
        2
    }

    fn input_dim(&self) -> usize {
        2
    }

    fn step(&self, x: &StateVec, u: &InputVec) -> StateVec {
        let x = Vector2::new(x[0], x[1]);
        let u = Vector2::new(u[0], u[1]);
        let bilinear = Vector2::new(
            (x.transpose() * self.c1 * u)[0],
            (x.transpose() * self.c2 * u)[0],
        );
        let next = self.a * x + self.b * u + bilinear;
        dvector![next[0], next[1]]
    }

    fn equilibrium(&self) -> (StateVec, InputVec) {
        (
            dvector![EQ_STATE[0], EQ_STATE[1]],
            dvector![EQ_INPUT[0], EQ_INPUT[1]],
        )
    }

    /// `u = u_e + K (x - x_e)`.
    fn terminal_control(&self, x: &StateVec) -> Option<InputVec> {
        Some(self.linear_feedback(x))
    }
}

impl Benchmark for BuckBoost {
    fn constraints(&self) -> ConstraintSpec {
        let terminal = self.params.terminal_constraint.then(|| {
            EllipsoidSet::new(
                dvector![EQ_STATE[0], EQ_STATE[1]],
                Self::terminal_weight(),
                self.params.terminal_level,
            )
            .expect("terminal level must be positive")
        });
        ConstraintSpec::new(
            BoxSet::new(vec![-0.1, 0.0], vec![22.5, 3.0]).unwrap(),
            BoxSet::new(vec![0.0, 0.0], vec![1.0, 1.0]).unwrap(),
            Vec::new(),
            terminal,
        )
        .unwrap()
    }

    fn cost(&self, horizon: usize) -> CostSpec {
        let (xe, ue) = self.equilibrium();
        CostSpec::constant(
            DMatrix::from_diagonal(&dvector![1.0, 2.0]),
            DMatrix::identity(2, 2),
            Self::terminal_weight(),
            horizon,
            xe,
            ue,
        )
        .expect("published converter weights are valid")
    }

    fn default_initial_state(&self) -> StateVec {
        dvector![EQ_STATE[0] + 1.0, EQ_STATE[1] + 2.0]
    }

    /// The calibrated ellipsoid, whether or not it is imposed as a constraint.
    fn terminal_set(&self) -> Option<EllipsoidSet> {
        EllipsoidSet::new(
            dvector![EQ_STATE[0], EQ_STATE[1]],
            Self::terminal_weight(),
            self.params.terminal_level,
        )
        .ok()
    }
}

/// Checks the terminal-set requirements on `boundary_points` equispaced points
/// of the level-`level` ellipsoid boundary: the feedback input is admissible,
/// the point lies in the state box, and the closed-loop successor does not
/// increase the quadratic form.
pub fn terminal_level_admissible(model: &BuckBoost, level: f64, boundary_points: usize) -> bool {
    let constraints = {
        let mut p = model.params;
        p.terminal_constraint = false;
        BuckBoost::new(p).constraints()
    };
    let set = EllipsoidSet::new(model.equilibrium().0, BuckBoost::terminal_weight(), level)
        .expect("level must be positive");
    // boundary points are center + sqrt(level) · L⁻ᵀ d for unit d, with P = L Lᵀ
    let chol = BuckBoost::terminal_weight().cholesky().unwrap();
    let l_inv_t = chol.l().try_inverse().unwrap().transpose();
    let radius = level.sqrt();
    (0..boundary_points).all(|i| {
        let theta = TAU * i as f64 / boundary_points as f64;
        let offset = &l_inv_t * dvector![theta.cos(), theta.sin()] * radius;
        let x = set.center() + offset;
        let u = model.linear_feedback(&x);
        let next = model.step(&x, &u);
        constraints.input_admissible(&u)
            && constraints.state_box.contains(&x)
            && set.value(&next) <= set.value(&x)
    })
}

/// Largest terminal level passing [`terminal_level_admissible`].
///
/// Scans decades `10^-3 .. 10^3` for the last passing one, then bisects within
/// the following decade.
pub fn calibrate_terminal_level(params: &BuckBoostParams, boundary_points: usize) -> f64 {
    let model = BuckBoost::new(*params);
    let passes = |level: f64| terminal_level_admissible(&model, level, boundary_points);
    let Some(decade) = (-3..=3).rev().find(|&d| passes(10f64.powi(d))) else {
        return 0.0;
    };
    let mut lo = 10f64.powi(decade);
    let mut hi = 10f64.powi(decade + 1);
    if passes(hi) {
        return hi;
    }
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        if passes(mid) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    lo
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::terminal_control;

    #[test]
    fn equilibrium_is_a_fixed_point() {
        let buck = BuckBoost::default();
        let (xe, ue) = buck.equilibrium();
        let next = buck.step(&xe, &ue);
        assert!((next - &xe).amax() < 1e-9);
    }

    #[test]
    fn origin_maps_to_origin() {
        let buck = BuckBoost::default();
        assert_eq!(buck.step(&dvector![0.0, 0.0], &dvector![0.0, 0.0]), dvector![0.0, 0.0]);
    }

    #[test]
    fn inductor_current_decays_through_resistance() {
        let buck = BuckBoost::default();
        let next = buck.step(&dvector![0.0, 1.0], &dvector![0.0, 0.0]);
        assert_eq!(next[0], 0.0);
        let expected = 1.0 - 10e-6 * 0.2 / 220e-6;
        assert!((next[1] - expected).abs() < 1e-15);
        assert!((next[1] - 0.990909).abs() < 1e-6);
    }

    #[test]
    fn feedback_at_equilibrium_is_the_equilibrium_input() {
        let buck = BuckBoost::default();
        let (xe, ue) = buck.equilibrium();
        assert_eq!(terminal_control(&buck, &xe).unwrap(), ue);
    }

    #[test]
    fn terminal_set_contains_its_center() {
        let buck = BuckBoost::default();
        assert!(buck.terminal_set().unwrap().contains(&buck.equilibrium().0));
    }

    #[test]
    fn shipped_level_is_admissible_and_close_to_calibration() {
        let buck = BuckBoost::default();
        assert!(terminal_level_admissible(&buck, BUCK_TERMINAL_LEVEL, 10_000));
        let calibrated = calibrate_terminal_level(buck.params(), 2_000);
        assert!(calibrated >= BUCK_TERMINAL_LEVEL);
        assert!(calibrated < BUCK_TERMINAL_LEVEL * 1.01);
        assert!(!terminal_level_admissible(&buck, 10.0, 10_000));
    }
}
