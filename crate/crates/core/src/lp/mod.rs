//! Bounded-variable linear programs and a self-contained primal simplex solver.
//!
//! A [`LinearProgram`] holds a sparse constraint matrix (one row per
//! constraint), per-variable bounds, and a linear objective. [`solve_lp`]
//! runs a two-phase revised simplex over it and returns a [`SolveReport`];
//! [`check_solution`] audits any claimed primal point without touching the
//! solver.

mod factor;
mod format;
mod simplex;

use thiserror::Error;

pub use format::write_lp_format;
pub use simplex::{solve_lp, solve_lp_with, SimplexOptions};

/// Primal feasibility tolerance used throughout the solver.
pub const FEASIBILITY_TOL: f64 = 1e-9;
/// Reduced-cost tolerance used for pricing and optimality.
pub const OPTIMALITY_TOL: f64 = 1e-9;
/// Tolerance for the relative primal/dual objective gap audit.
pub const DUALITY_GAP_TOL: f64 = 1e-7;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LpError {
    #[error("invalid linear program: {0}")]
    InvalidModel(String),
    #[error("simplex failed to certify a status after {iterations} iterations")]
    NumericalFailure { iterations: usize },
    #[error("primal vector has length {got}, expected {expected}")]
    LengthMismatch { expected: usize, got: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sense {
    Maximize,
    Minimize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Relation {
    Le,
    Eq,
    Ge,
}

/// One sparse row `Σ coeffs · x  (relation)  rhs`.
#[derive(Debug, Clone, PartialEq)]
pub struct Constraint {
    pub coeffs: Vec<(usize, f64)>,
    pub relation: Relation,
    pub rhs: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LinearProgram {
    pub sense: Sense,
    pub objective: Vec<f64>,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    pub constraints: Vec<Constraint>,
}

impl LinearProgram {
    pub fn new(sense: Sense) -> Self {
        LinearProgram {
            sense,
            objective: Vec::new(),
            lower: Vec::new(),
            upper: Vec::new(),
            constraints: Vec::new(),
        }
    }

    /// Adds a variable and returns its column index.
    pub fn add_var(&mut self, cost: f64, lower: f64, upper: f64) -> usize {
        self.objective.push(cost);
        self.lower.push(lower);
        self.upper.push(upper);
        self.objective.len() - 1
    }

    /// Adds a constraint and returns its row index.
    pub fn add_constraint(&mut self, coeffs: Vec<(usize, f64)>, relation: Relation, rhs: f64) -> usize {
        self.constraints.push(Constraint {
            coeffs,
            relation,
            rhs,
        });
        self.constraints.len() - 1
    }

    pub fn n_vars(&self) -> usize {
        self.objective.len()
    }

    pub fn n_constraints(&self) -> usize {
        self.constraints.len()
    }

    pub fn objective_at(&self, x: &[f64]) -> f64 {
        self.objective.iter().zip(x).map(|(c, v)| c * v).sum()
    }

    /// Checks the structural invariants: consistent lengths, `lower ≤ upper`,
    /// finite coefficients, and in-range column references.
    pub fn validate(&self) -> Result<(), LpError> {
        let n = self.n_vars();
        if self.lower.len() != n || self.upper.len() != n {
            return Err(LpError::InvalidModel(format!(
                "bound vectors have lengths {}/{}, expected {n}",
                self.lower.len(),
                self.upper.len()
            )));
        }
        for j in 0..n {
            let (l, u) = (self.lower[j], self.upper[j]);
            if l.is_nan() || u.is_nan() || l > u || l == f64::INFINITY || u == f64::NEG_INFINITY {
                return Err(LpError::InvalidModel(format!(
                    "variable {j} has invalid bounds [{l}, {u}]"
                )));
            }
            if !self.objective[j].is_finite() {
                return Err(LpError::InvalidModel(format!(
                    "variable {j} has non-finite cost"
                )));
            }
        }
        for (i, row) in self.constraints.iter().enumerate() {
            if !row.rhs.is_finite() {
                return Err(LpError::InvalidModel(format!("row {i} has non-finite rhs")));
            }
            for &(j, a) in &row.coeffs {
                if j >= n {
                    return Err(LpError::InvalidModel(format!(
                        "row {i} references variable {j} but only {n} exist"
                    )));
                }
                if !a.is_finite() {
                    return Err(LpError::InvalidModel(format!(
                        "row {i} has a non-finite coefficient"
                    )));
                }
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolveStatus {
    Optimal,
    Infeasible,
    Unbounded,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveReport {
    pub status: SolveStatus,
    /// Objective in the program's own sense; `Some` only when optimal.
    pub objective_value: Option<f64>,
    pub primal: Vec<f64>,
    /// One multiplier per constraint, in the program's own sense; empty
    /// unless optimal.
    pub duals: Vec<f64>,
    pub iterations: usize,
}

impl SolveReport {
    pub fn is_optimal(&self) -> bool {
        self.status == SolveStatus::Optimal
    }
}

/// Residuals of a candidate point against a program.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ResidualReport {
    pub max_bound_violation: f64,
    pub max_constraint_violation: f64,
    pub objective_value: f64,
}

impl ResidualReport {
    pub fn max_violation(&self) -> f64 {
        self.max_bound_violation.max(self.max_constraint_violation)
    }
}

/// Computes bound and row violations of `primal` directly from the model.
pub fn check_solution(lp: &LinearProgram, primal: &[f64]) -> Result<ResidualReport, LpError> {
    if primal.len() != lp.n_vars() {
        return Err(LpError::LengthMismatch {
            expected: lp.n_vars(),
            got: primal.len(),
        });
    }
    let mut max_bound_violation = 0.0f64;
    for (j, &x) in primal.iter().enumerate() {
        let v = (lp.lower[j] - x).max(x - lp.upper[j]).max(0.0);
        max_bound_violation = max_bound_violation.max(v);
    }
    let mut max_constraint_violation = 0.0f64;
    for row in &lp.constraints {
        let lhs: f64 = row.coeffs.iter().map(|&(j, a)| a * primal[j]).sum();
        let v = match row.relation {
            Relation::Le => lhs - row.rhs,
            Relation::Ge => row.rhs - lhs,
            Relation::Eq => (lhs - row.rhs).abs(),
        };
        max_constraint_violation = max_constraint_violation.max(v.max(0.0));
    }
    Ok(ResidualReport {
        max_bound_violation,
        max_constraint_violation,
        objective_value: lp.objective_at(primal),
    })
}

/// Value of the Lagrangian dual at `duals`, in the program's own sense.
///
/// Each variable contributes its reduced cost times whichever bound the
/// inner optimization would pick; returns infinity (for maximization, or
/// negative infinity for minimization) when a reduced cost points at an
/// infinite bound by more than the optimality tolerance.
pub fn dual_objective(lp: &LinearProgram, duals: &[f64]) -> f64 {
    let sign = match lp.sense {
        Sense::Maximize => 1.0,
        Sense::Minimize => -1.0,
    };
    let mut reduced: Vec<f64> = lp.objective.clone();
    let mut value = 0.0;
    for (row, &y) in lp.constraints.iter().zip(duals) {
        value += row.rhs * y;
        for &(j, a) in &row.coeffs {
            reduced[j] -= a * y;
        }
    }
    for (j, &d) in reduced.iter().enumerate() {
        // in maximization form a positive reduced cost pushes to the upper bound
        let d_max = sign * d;
        let bound = if d_max > 0.0 { lp.upper[j] } else { lp.lower[j] };
        if bound.is_infinite() {
            if d_max.abs() > OPTIMALITY_TOL {
                return sign * f64::INFINITY;
            }
            continue;
        }
        value += d * bound;
    }
    value
}
