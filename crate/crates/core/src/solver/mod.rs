//! Dense convex QP and LP solvers.
//!
//! [`solve_qp`] is a dual active-set method (Goldfarb–Idnani) on a
//! strictly convex objective; it starts from the unconstrained minimizer, so
//! infeasibility shows up as a constraint that cannot be satisfied without
//! an unbounded dual step. [`solve_lp`] is a two-phase dense tableau simplex.
//! Both report a KKT residual recomputed from the returned point.

mod lp;
mod qp;

pub use lp::{solve_lp, LpProblem};
pub use qp::{solve_qp, DualActiveSet, QpProblem};

use thiserror::Error;

use crate::numerics::NumericsError;

pub const DEFAULT_TOL: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolveStatus {
    Optimal,
    Infeasible,
    Unbounded,
    IterLimit,
}

#[derive(Debug, Clone)]
pub struct SolveOutcome {
    pub status: SolveStatus,
    pub point: Vec<f64>,
    pub objective: f64,
    pub kkt_residual: f64,
    pub iterations: usize,
    /// Inequality multipliers (λ ≥ 0 for rows `a·x ≤ b`), one per row.
    pub multipliers: Vec<f64>,
}

impl SolveOutcome {
    pub fn is_optimal(&self) -> bool {
        self.status == SolveStatus::Optimal
    }

    fn failed(status: SolveStatus, n: usize, m: usize, iterations: usize) -> Self {
        Self {
            status,
            point: vec![0.0; n],
            objective: f64::NAN,
            kkt_residual: f64::INFINITY,
            iterations,
            multipliers: vec![0.0; m],
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SolverError {
    #[error("QP hessian must be positive definite: {0}")]
    Hessian(#[from] NumericsError),
    #[error("problem dimensions inconsistent: {0}")]
    Dimension(String),
    #[error("tolerance must be positive")]
    Tolerance,
}

/// Default iteration cap, `10·(variables + constraints)`.
pub fn default_max_iter(vars: usize, cons: usize) -> usize {
    10 * (vars + cons).max(1)
}
