//! State, input and terminal constraint sets.
//!
//! Every membership test uses closed inequalities exactly as written, with no
//! floating slack: a point exactly on a bound is inside.

use std::fmt;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{check_dim, NmpcError, Result};
use crate::plant::{Plan, StateVec, Trajectory};

/// Axis-aligned box; infinite bounds mark unbounded coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct BoxSet {
    lower: DVector<f64>,
    upper: DVector<f64>,
}

impl BoxSet {
    pub fn new(lower: Vec<f64>, upper: Vec<f64>) -> Result<Self> {
        check_dim("box bounds", lower.len(), upper.len())?;
        for (i, (lo, hi)) in lower.iter().zip(&upper).enumerate() {
            if lo.is_nan() || hi.is_nan() || lo > hi {
                return Err(NmpcError::Contract(format!(
                    "box coordinate {i} has invalid bounds [{lo}, {hi}]"
                )));
            }
        }
        Ok(BoxSet {
            lower: DVector::from_vec(lower),
            upper: DVector::from_vec(upper),
        })
    }

    /// All of `R^dim`.
    pub fn unbounded(dim: usize) -> Self {
        BoxSet {
            lower: DVector::from_element(dim, f64::NEG_INFINITY),
            upper: DVector::from_element(dim, f64::INFINITY),
        }
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    pub fn lower(&self) -> &DVector<f64> {
        &self.lower
    }

    pub fn upper(&self) -> &DVector<f64> {
        &self.upper
    }

    pub fn is_bounded(&self) -> bool {
        self.first_unbounded().is_none()
    }

    pub(crate) fn first_unbounded(&self) -> Option<usize> {
        (0..self.dim()).find(|&i| !self.lower[i].is_finite() || !self.upper[i].is_finite())
    }

    pub fn contains(&self, v: &DVector<f64>) -> bool {
        v.len() == self.dim()
            && v.iter()
                .zip(self.lower.iter().zip(self.upper.iter()))
                .all(|(x, (lo, hi))| *lo <= *x && *x <= *hi)
    }
}

/// `{ x : (x - c)ᵀ S (x - c) ≤ level }`.
#[derive(Debug, Clone, PartialEq)]
pub struct EllipsoidSet {
    center: StateVec,
    shape: DMatrix<f64>,
    level: f64,
}

impl EllipsoidSet {
    pub fn new(center: StateVec, shape: DMatrix<f64>, level: f64) -> Result<Self> {
        let n = center.len();
        check_dim("ellipsoid shape rows", n, shape.nrows())?;
        check_dim("ellipsoid shape cols", n, shape.ncols())?;
        if level.is_nan() || level <= 0.0 {
            return Err(NmpcError::Contract(format!("ellipsoid level must be positive, got {level}")));
        }
        if !is_symmetric(&shape) {
            return Err(NmpcError::Contract("ellipsoid shape is not symmetric".into()));
        }
        if shape.clone().cholesky().is_none() {
            return Err(NmpcError::Contract("ellipsoid shape is not positive definite".into()));
        }
        Ok(EllipsoidSet { center, shape, level })
    }

    pub fn center(&self) -> &StateVec {
        &self.center
    }

    pub fn shape(&self) -> &DMatrix<f64> {
        &self.shape
    }

    pub fn level(&self) -> f64 {
        self.level
    }

    /// The quadratic form `(x - c)ᵀ S (x - c)`.
    pub fn value(&self, x: &StateVec) -> f64 {
        let d = x - &self.center;
        d.dot(&(&self.shape * &d))
    }

    pub fn contains(&self, x: &StateVec) -> bool {
        x.len() == self.center.len() && self.value(x) <= self.level
    }
}

pub(crate) fn is_symmetric(m: &DMatrix<f64>) -> bool {
    m.is_square()
        && (0..m.nrows()).all(|i| (0..i).all(|j| (m[(i, j)] - m[(j, i)]).abs() <= 1e-12))
}

/// A disc in the plane spanned by two state coordinates that the state must stay out of.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObstacleSet {
    pub center: [f64; 2],
    pub radius: f64,
    /// State coordinates holding the planar position.
    pub axes: [usize; 2],
}

impl ObstacleSet {
    pub fn new(center: [f64; 2], radius: f64, axes: [usize; 2]) -> Result<Self> {
        if radius.is_nan() || radius <= 0.0 {
            return Err(NmpcError::Contract(format!("obstacle radius must be positive, got {radius}")));
        }
        Ok(ObstacleSet { center, radius, axes })
    }

    /// True when `x` lies outside the open disc, boundary included.
    pub fn clear_of(&self, x: &StateVec) -> bool {
        let da = x[self.axes[0]] - self.center[0];
        let db = x[self.axes[1]] - self.center[1];
        da * da + db * db >= self.radius * self.radius
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ViolationKind {
    InputBound,
    StateBox,
    Obstacle,
    Terminal,
}

impl fmt::Display for ViolationKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ViolationKind::InputBound => "input-bound",
            ViolationKind::StateBox => "state-box",
            ViolationKind::Obstacle => "obstacle",
            ViolationKind::Terminal => "terminal",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeasibilityReport {
    pub feasible: bool,
    pub violation_index: Option<usize>,
    pub violation_kind: Option<ViolationKind>,
}

impl FeasibilityReport {
    pub const FEASIBLE: FeasibilityReport = FeasibilityReport {
        feasible: true,
        violation_index: None,
        violation_kind: None,
    };

    pub fn violation(index: usize, kind: ViolationKind) -> Self {
        FeasibilityReport {
            feasible: false,
            violation_index: Some(index),
            violation_kind: Some(kind),
        }
    }
}

impl fmt::Display for FeasibilityReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match (self.violation_index, self.violation_kind) {
            (Some(i), Some(kind)) => write!(f, "{kind} violation at horizon index {i}"),
            _ => f.write_str("feasible"),
        }
    }
}

/// The admissible sets of one control problem.
#[derive(Debug, Clone, PartialEq)]
pub struct ConstraintSpec {
    pub state_box: BoxSet,
    pub input_box: BoxSet,
    pub obstacles: Vec<ObstacleSet>,
    pub terminal: Option<EllipsoidSet>,
}

impl ConstraintSpec {
    pub fn new(
        state_box: BoxSet,
        input_box: BoxSet,
        obstacles: Vec<ObstacleSet>,
        terminal: Option<EllipsoidSet>,
    ) -> Result<Self> {
        let n = state_box.dim();
        for obs in &obstacles {
            if obs.axes.iter().any(|&a| a >= n) {
                return Err(NmpcError::Contract("obstacle axis outside the state".into()));
            }
        }
        if let Some(t) = &terminal {
            check_dim("terminal set", n, t.center().len())?;
        }
        Ok(ConstraintSpec {
            state_box,
            input_box,
            obstacles,
            terminal,
        })
    }

    pub fn state_dim(&self) -> usize {
        self.state_box.dim()
    }

    pub fn input_dim(&self) -> usize {
        self.input_box.dim()
    }

    /// Membership of one predicted state in `X`, plus `X_T` when `terminal` is set.
    ///
    /// The terminal state is also held to `X` so plants without a terminal set
    /// still keep the horizon end admissible.
    pub fn state_violation(&self, x: &StateVec, terminal: bool) -> Option<ViolationKind> {
        if !self.state_box.contains(x) {
            return Some(ViolationKind::StateBox);
        }
        if self.obstacles.iter().any(|o| !o.clear_of(x)) {
            return Some(ViolationKind::Obstacle);
        }
        if terminal {
            if let Some(t) = &self.terminal {
                if !t.contains(x) {
                    return Some(ViolationKind::Terminal);
                }
            }
        }
        None
    }

    pub fn input_admissible(&self, u: &DVector<f64>) -> bool {
        self.input_box.contains(u)
    }
}

/// Checks a predicted trajectory from horizon index `from_index` onward.
///
/// Inputs are checked from `from_index - 1` (the input that produced the first
/// checked state), states on `[from_index, N-1]` against `X`, and the terminal
/// state against `X` and `X_T`. The earliest violation in horizon order is
/// reported; at a shared index the state is checked before its input.
pub fn check_feasible(
    constraints: &ConstraintSpec,
    traj: &Trajectory,
    plan: &Plan,
    from_index: usize,
) -> Result<FeasibilityReport> {
    let horizon = plan.horizon();
    check_dim("trajectory length", horizon + 1, traj.len())?;
    check_dim("trajectory state", constraints.state_dim(), traj[0].len())?;
    check_dim("plan input", constraints.input_dim(), plan.input_dim())?;
    if from_index > horizon {
        return Err(NmpcError::Contract(format!(
            "from_index {from_index} exceeds horizon {horizon}"
        )));
    }

    let input_start = from_index.saturating_sub(1);
    for i in input_start..=horizon {
        if i >= from_index {
            if let Some(kind) = constraints.state_violation(&traj[i], i == horizon) {
                return Ok(FeasibilityReport::violation(i, kind));
            }
        }
        if i < horizon && !constraints.input_admissible(&plan[i]) {
            return Ok(FeasibilityReport::violation(i, ViolationKind::InputBound));
        }
    }
    Ok(FeasibilityReport::FEASIBLE)
}
