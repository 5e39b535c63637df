//! Dense linear algebra and seeded randomness shared by every other module.

mod matrix;
mod rng;

pub use matrix::{cholesky, dot, norm2, norm_inf, rank, solve_square, Cholesky, Lu, Matrix};
pub use rng::{uniform_in_box, Rng};

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum NumericsError {
    #[error("matrix is not positive definite (pivot {pivot} = {value:e})")]
    NotPositiveDefinite { pivot: usize, value: f64 },
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("matrix entries must be finite")]
    NonFinite,
}
