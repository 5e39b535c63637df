//! Polyhedra in H-representation and the exact small-dimension operations
//! built on them.

mod ops;
mod polyhedron;

pub use ops::{
    area_2d, hull_2d, polygon_area, project, project_with_cap, remove_redundant, vertices, Simplex, DEFAULT_ROW_CAP,
    MAX_VERTEX_DIM,
};
pub use polyhedron::Polyhedron;

use thiserror::Error;

use crate::solver::SolverError;

pub const DEFAULT_TOL: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeometryError {
    #[error("polyhedron is unbounded")]
    Unbounded,
    #[error("polyhedron is empty")]
    Empty,
    #[error("dimension {dim} exceeds the supported maximum {max}")]
    DimensionTooLarge { dim: usize, max: usize },
    #[error("projection produced {rows} rows, over the cap of {cap}")]
    RowBlowup { rows: usize, cap: usize },
    #[error("points are collinear")]
    Degenerate,
    #[error("simplex vertices are affinely dependent")]
    AffinelyDependent,
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("parse error: {0}")]
    Parse(String),
    #[error("LP failure: {0}")]
    Solver(String),
}

impl From<SolverError> for GeometryError {
    fn from(e: SolverError) -> Self {
        GeometryError::Solver(e.to_string())
    }
}
