//! Relative error of a scalar flux against a reference.

use serde::{Deserialize, Serialize};

use pnlab::solution::FluxSolution;

use crate::HarnessError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorReport {
    pub solver: String,
    pub reference: String,
    pub grid_size: usize,
    /// `sqrt(Σ (φ_sol − φ_ref)² / Σ φ_ref²)`.
    pub xi_rel: f64,
    /// Σ of per-point squared relative errors, no root and no 1/G.
    pub xi_rel_pointwise: f64,
    /// `((φ_sol − φ_ref) / φ_ref)²`; `None` where the reference is zero.
    pub squared_relative: Vec<Option<f64>>,
}

impl ErrorReport {
    pub fn percent(&self) -> String {
        format_percent(self.xi_rel)
    }
}

/// One decimal place, e.g. `18.9%`.
pub fn format_percent(v: f64) -> String {
    format!("{:.1}%", 100.0 * v)
}

/// Compares the φ_0 columns on `grid`, interpolating where a solution
/// is stored on other points.
pub fn compute_error(solution: &FluxSolution, reference: &FluxSolution, grid: &[f64]) -> Result<ErrorReport, HarnessError> {
    let sol: Vec<f64> = grid.iter().map(|&x| solution.phi0_at(x)).collect::<Result<_, _>>()?;
    let rf: Vec<f64> = grid.iter().map(|&x| reference.phi0_at(x)).collect::<Result<_, _>>()?;
    error_from_values(&sol, &rf, &solution.label, &reference.label)
}

pub fn error_from_values(sol: &[f64], rf: &[f64], solver: &str, reference: &str) -> Result<ErrorReport, HarnessError> {
    if sol.len() != rf.len() || sol.is_empty() {
        return Err(HarnessError::Case(format!("cannot compare {} values against {}", sol.len(), rf.len())));
    }
    let (mut num, mut den) = (0.0, 0.0);
    let mut squared_relative = Vec::with_capacity(rf.len());
    for (&s, &r) in sol.iter().zip(rf) {
        num += (s - r) * (s - r);
        den += r * r;
        squared_relative.push((r != 0.0).then(|| ((s - r) / r).powi(2)));
    }
    if den == 0.0 {
        return Err(HarnessError::UndefinedError);
    }
    Ok(ErrorReport {
        solver: solver.into(),
        reference: reference.into(),
        grid_size: rf.len(),
        xi_rel: (num / den).sqrt(),
        xi_rel_pointwise: squared_relative.iter().flatten().sum(),
        squared_relative,
    })
}
