//! Closed-loop linear MPC sampling.
//!
//! The finite-horizon problem (no terminal set) is condensed into a dense QP
//! in the stacked input sequence; the closed loop re-solves it at every
//! visited state. States of trajectories that reach the origin are pooled
//! into a [`SampleSet`].

mod condense;
mod samples;

pub use condense::{CondensedQp, LinearSystem, MpcProblem};
pub use samples::{collect, dedup_points, simulate, CollectReport, Partition, SampleSet, TrajectoryOutcome, TrajectoryStatus};

use thiserror::Error;

use crate::geometry::GeometryError;
use crate::solver::SolverError;

pub const DEFAULT_CONV_TOL: f64 = 1e-3;
pub const DEFAULT_MAX_STEPS: usize = 200;
pub const DEDUP_TOL: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MpcError {
    #[error("invalid MPC problem: {0}")]
    Invalid(String),
    #[error("MPC problem infeasible at the current state")]
    Infeasible,
    #[error("no trajectory converged; sample set is empty")]
    EmptySampleSet,
    #[error("sample set must be 0-symmetric for this operation")]
    NotSymmetric,
    #[error("QP solver: {0}")]
    Solver(#[from] SolverError),
    #[error("geometry: {0}")]
    Geometry(#[from] GeometryError),
}
