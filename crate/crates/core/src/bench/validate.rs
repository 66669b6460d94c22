use std::path::Path;

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use super::{BenchError, ExperimentConfig};
use crate::constraints::ViolationKind;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogViolation {
    pub k: usize,
    /// `state-box`, `obstacle`, `input-bound` or `dynamics`.
    pub kind: String,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub rows: usize,
    pub violations: Vec<LogViolation>,
    /// Largest `‖x_{k+1} - f(x_k, u_k)‖∞` between consecutive rows.
    pub max_dynamics_error: f64,
}

impl ValidationReport {
    pub fn is_clean(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Relative tolerance of the row-to-row dynamics check.
const DYNAMICS_TOL: f64 = 1e-12;

fn columns(header: &csv::StringRecord, prefix: char) -> Vec<usize> {
    let mut cols: Vec<(usize, usize)> = header
        .iter()
        .enumerate()
        .filter_map(|(pos, name)| {
            let rest = name.strip_prefix(prefix)?;
            rest.parse::<usize>().ok().map(|i| (i, pos))
        })
        .collect();
    cols.sort();
    cols.into_iter().map(|(_, pos)| pos).collect()
}

/// Re-checks a per-step CSV against the admissible sets of `cfg`'s plant
/// (state box, obstacles, input box) and against the plant dynamics between
/// consecutive rows. The terminal set is not checked: it constrains
/// predictions, not visited states.
pub fn validate_log(cfg: &ExperimentConfig, csv_path: &Path) -> Result<ValidationReport, BenchError> {
    let problem = cfg.plant.problem(cfg.horizon.max(1));
    let n = problem.model.state_dim();
    let m = problem.model.input_dim();
    let mut reader = csv::Reader::from_path(csv_path).map_err(|e| BenchError::io(csv_path.display().to_string(), e))?;
    let header = reader.headers().map_err(|e| BenchError::io(csv_path.display().to_string(), e))?.clone();
    let (xs, us) = (columns(&header, 'x'), columns(&header, 'u'));
    let k_col = header.iter().position(|h| h == "k");
    if xs.len() != n || us.len() != m || k_col.is_none() {
        return Err(BenchError::Config(format!(
            "{} does not look like a {} log: expected k, x0..x{}, u0..u{}",
            csv_path.display(),
            cfg.plant.name(),
            n - 1,
            m - 1
        )));
    }
    let k_col = k_col.expect("checked above");
    let mut violations = Vec::new();
    let mut max_dynamics_error = 0.0f64;
    let mut prev: Option<(DVector<f64>, DVector<f64>)> = None;
    let mut rows = 0;
    for (line, record) in reader.records().enumerate() {
        let record = record.map_err(|e| BenchError::io(csv_path.display().to_string(), e))?;
        let field = |pos: usize| -> Result<f64, BenchError> {
            record[pos]
                .trim()
                .parse::<f64>()
                .map_err(|e| BenchError::Config(format!("row {}: column {}: {e}", line + 1, &header[pos])))
        };
        let k = record[k_col]
            .trim()
            .parse::<usize>()
            .map_err(|e| BenchError::Config(format!("row {}: k: {e}", line + 1)))?;
        let x = DVector::from_vec(xs.iter().map(|&p| field(p)).collect::<Result<Vec<_>, _>>()?);
        let u = DVector::from_vec(us.iter().map(|&p| field(p)).collect::<Result<Vec<_>, _>>()?);
        if let Some(kind) = problem.constraints.state_violation(&x, false) {
            let kind = match kind {
                ViolationKind::Obstacle => "obstacle",
                _ => "state-box",
            };
            violations.push(LogViolation {
                k,
                kind: kind.into(),
                detail: format!("state {:?}", x.as_slice()),
            });
        }
        if !problem.constraints.input_admissible(&u) {
            violations.push(LogViolation {
                k,
                kind: "input-bound".into(),
                detail: format!("input {:?}", u.as_slice()),
            });
        }
        if let Some((px, pu)) = &prev {
            let predicted = problem.model.step(px, pu);
            let err = (&predicted - &x).amax();
            max_dynamics_error = max_dynamics_error.max(err);
            if err > DYNAMICS_TOL * (1.0 + predicted.amax()) {
                violations.push(LogViolation {
                    k,
                    kind: "dynamics".into(),
                    detail: format!("state differs from the plant prediction by {err:e}"),
                });
            }
        }
        prev = Some((x, u));
        rows += 1;
    }
    Ok(ValidationReport {
        rows,
        violations,
        max_dynamics_error,
    })
}
