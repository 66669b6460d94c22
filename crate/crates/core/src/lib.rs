//! Sampling-based suboptimal nonlinear model predictive control.
//!
//! A feasible input plan is improved by sweeping the horizon backward and
//! trying sampled replacements for one input at a time. Any interruption
//! leaves a feasible plan no worse than the warm start, so the solver can run
//! under a hard time budget.
//!
//! ```
//! use nalgebra::dvector;
//! use sampled_nmpc::models::CartSpring;
//! use sampled_nmpc::solver::{closed_loop, Problem, SolverConfig};
//!
//! let problem = Problem::from_benchmark(CartSpring::default(), 10);
//! let log = closed_loop(problem, SolverConfig::new(10, 10), &dvector![-2.5, 3.0], 5).unwrap();
//! assert_eq!(log.records.len(), 5);
//! ```

pub mod bench;
pub mod complexity;
pub mod constraints;
pub mod cost;
pub mod error;
pub mod models;
pub mod plant;
pub mod sampling;
pub mod solver;

pub use constraints::{check_feasible, BoxSet, ConstraintSpec, EllipsoidSet, FeasibilityReport, ObstacleSet, ViolationKind};
pub use cost::{evaluate_cost, CostSpec};
pub use error::{NmpcError, Result};
pub use plant::{rollout, shift_plan, InputVec, Plan, PlantModel, StateVec, Trajectory};
