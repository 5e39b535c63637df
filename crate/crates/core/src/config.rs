//! JSON run configuration.
//!
//! ```json
//! {
//!   "A": [[2, 1], [-1, 2]], "B": [[1, 0], [0, 1]],
//!   "X": {"bound": [1, 1]}, "U": {"H": [[1, 0], ...], "h": [1, ...]},
//!   "Q": 1, "R": 5000, "P": [[10, 0], [0, 10]], "horizon": 10,
//!   "n_starts": 300, "seed": 1,
//!   "fit": {"m_candidates": [3, 4, 5, 6], "restarts": 50}
//! }
//! ```
//!
//! Weights are either a matrix or a scalar multiple of the identity. Sets are
//! either a symmetric box `|x_i| ≤ bound_i` or a general `H x ≤ h`.

use serde::Deserialize;
use thiserror::Error;

use crate::geometry::Polyhedron;
use crate::mpc::{LinearSystem, MpcError, MpcProblem, DEFAULT_CONV_TOL, DEFAULT_MAX_STEPS};
use crate::numerics::Matrix;
use crate::pwl::{FitConfig, DEFAULT_DEPTH, DEFAULT_EPS, DEFAULT_MAX_ITER};

pub const DEFAULT_ZERO_TOL: f64 = 1e-12;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read config: {0}")]
    Read(String),
    #[error("malformed config: {0}")]
    Json(#[from] serde_json::Error),
    #[error("invalid config: {0}")]
    Invalid(String),
}

impl From<MpcError> for ConfigError {
    fn from(e: MpcError) -> Self {
        ConfigError::Invalid(e.to_string())
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum Weight {
    Scalar(f64),
    Matrix(Vec<Vec<f64>>),
}

impl Weight {
    fn to_matrix(&self, n: usize, name: &str) -> Result<Matrix, ConfigError> {
        match self {
            Weight::Scalar(s) => Ok(Matrix::identity(n).scaled(*s)),
            Weight::Matrix(rows) => matrix(rows, name),
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(untagged, deny_unknown_fields)]
pub enum SetSpec {
    Box {
        bound: Vec<f64>,
    },
    Halfspaces {
        #[serde(rename = "H")]
        h_mat: Vec<Vec<f64>>,
        h: Vec<f64>,
    },
}

impl SetSpec {
    fn to_polyhedron(&self, n: usize, name: &str) -> Result<Polyhedron, ConfigError> {
        let p = match self {
            SetSpec::Box { bound } => {
                if bound.iter().any(|b| !(*b > 0.0) || !b.is_finite()) {
                    return Err(ConfigError::Invalid(format!("{name} bounds must be positive and finite")));
                }
                Polyhedron::symmetric_box(bound)
            }
            SetSpec::Halfspaces { h_mat, h } => Polyhedron::new(matrix(h_mat, name)?, h.clone()),
        }
        .map_err(|e| ConfigError::Invalid(format!("{name}: {e}")))?;
        if p.dim() != n {
            return Err(ConfigError::Invalid(format!("{name} must be {n}-dimensional, got {}", p.dim())));
        }
        if !p.is_zero_symmetric(1e-12) {
            return Err(ConfigError::Invalid(format!("{name} must be 0-symmetric (x in {name} implies -x in {name})")));
        }
        Ok(p)
    }
}

fn matrix(rows: &[Vec<f64>], name: &str) -> Result<Matrix, ConfigError> {
    if rows.is_empty() {
        return Err(ConfigError::Invalid(format!("{name} is empty")));
    }
    let m = Matrix::from_rows(rows).map_err(|e| ConfigError::Invalid(format!("{name}: {e}")))?;
    if m.as_slice().iter().any(|v| !v.is_finite()) {
        return Err(ConfigError::Invalid(format!("{name} has non-finite entries")));
    }
    Ok(m)
}

fn default_conv_tol() -> f64 {
    DEFAULT_CONV_TOL
}
fn default_max_steps() -> usize {
    DEFAULT_MAX_STEPS
}
fn default_zero_tol() -> f64 {
    DEFAULT_ZERO_TOL
}
fn default_eps() -> f64 {
    DEFAULT_EPS
}
fn default_max_iter() -> usize {
    DEFAULT_MAX_ITER
}
fn default_depth() -> usize {
    DEFAULT_DEPTH
}
fn default_oracle_iters() -> usize {
    crate::invariant::DEFAULT_ORACLE_ITERS
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FitSection {
    pub m_candidates: Vec<usize>,
    pub restarts: usize,
    #[serde(default = "default_eps")]
    pub eps: f64,
    #[serde(default = "default_max_iter")]
    pub max_iter: usize,
    #[serde(default = "default_depth")]
    pub depth: usize,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawConfig {
    #[serde(default)]
    pub name: Option<String>,
    #[serde(rename = "A")]
    pub a: Vec<Vec<f64>>,
    #[serde(rename = "B")]
    pub b: Vec<Vec<f64>>,
    #[serde(rename = "X")]
    pub x: SetSpec,
    #[serde(rename = "U")]
    pub u: SetSpec,
    #[serde(rename = "Q")]
    pub q: Weight,
    #[serde(rename = "R")]
    pub r: Weight,
    #[serde(rename = "P")]
    pub p: Weight,
    pub horizon: usize,
    pub n_starts: usize,
    #[serde(default = "default_conv_tol")]
    pub conv_tol: f64,
    #[serde(default = "default_max_steps")]
    pub max_steps: usize,
    #[serde(default = "default_zero_tol")]
    pub zero_tol: f64,
    pub fit: FitSection,
    #[serde(default)]
    pub seed: u64,
    /// Also run the backward-reachability oracle (sensible for `n_x ≤ 3`).
    #[serde(default)]
    pub oracle: bool,
    #[serde(default = "default_oracle_iters")]
    pub oracle_iters: usize,
    #[serde(default)]
    pub out: Option<String>,
}

/// Validated configuration.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub name: String,
    pub mpc: MpcProblem,
    pub n_starts: usize,
    pub conv_tol: f64,
    pub max_steps: usize,
    pub zero_tol: f64,
    pub fit: FitConfig,
    pub seed: u64,
    pub oracle: bool,
    pub oracle_iters: usize,
    pub out: Option<String>,
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self, ConfigError> {
        Self::from_raw(serde_json::from_str(text)?)
    }

    pub fn from_path(path: &std::path::Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|e| ConfigError::Read(format!("{}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn from_raw(raw: RawConfig) -> Result<Self, ConfigError> {
        let a = matrix(&raw.a, "A")?;
        let b = matrix(&raw.b, "B")?;
        let (nx, nu) = (a.rows(), b.cols());
        let system = LinearSystem::new(a, b)?;
        let mpc = MpcProblem::new(
            system,
            raw.q.to_matrix(nx, "Q")?,
            raw.r.to_matrix(nu, "R")?,
            raw.p.to_matrix(nx, "P")?,
            raw.horizon,
            raw.x.to_polyhedron(nx, "X")?,
            raw.u.to_polyhedron(nu, "U")?,
        )?;
        if nx < 2 {
            return Err(ConfigError::Invalid("state dimension must be at least 2".into()));
        }
        if raw.n_starts == 0 {
            return Err(ConfigError::Invalid("n_starts must be positive".into()));
        }
        if !(raw.conv_tol > 0.0) || raw.max_steps == 0 {
            return Err(ConfigError::Invalid("conv_tol and max_steps must be positive".into()));
        }
        if !(raw.zero_tol >= 0.0) {
            return Err(ConfigError::Invalid("zero_tol must be non-negative".into()));
        }
        let fit = FitConfig {
            m_candidates: raw.fit.m_candidates,
            restarts: raw.fit.restarts,
            eps: raw.fit.eps,
            max_iter: raw.fit.max_iter,
            depth: raw.fit.depth,
            seed: raw.seed,
        };
        fit.validate().map_err(|e| ConfigError::Invalid(e.to_string()))?;
        Ok(Self {
            name: raw.name.unwrap_or_else(|| "run".into()),
            mpc,
            n_starts: raw.n_starts,
            conv_tol: raw.conv_tol,
            max_steps: raw.max_steps,
            zero_tol: raw.zero_tol,
            fit,
            seed: raw.seed,
            oracle: raw.oracle,
            oracle_iters: raw.oracle_iters,
            out: raw.out,
        })
    }

    pub fn nx(&self) -> usize {
        self.mpc.system.nx()
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self.fit.seed = seed;
        self
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const EX: &str = r#"{
        "A": [[2, 1], [-1, 2]], "B": [[1, 0], [0, 1]],
        "X": {"bound": [1, 1]}, "U": {"bound": [1, 1]},
        "Q": 1, "R": 5000, "P": [[10, 0], [0, 10]], "horizon": 10,
        "n_starts": 5, "fit": {"m_candidates": [2], "restarts": 1}
    }"#;

    #[test]
    fn parses_scalar_and_matrix_weights() {
        let c = RunConfig::from_json(EX).unwrap();
        assert_eq!(c.mpc.r[(1, 1)], 5000.0);
        assert_eq!(c.mpc.p[(0, 0)], 10.0);
        assert_eq!(c.max_steps, DEFAULT_MAX_STEPS);
        assert_eq!(c.fit.eps, DEFAULT_EPS);
    }

    #[test]
    fn rejects_asymmetric_set() {
        let bad = EX.replace(r#""X": {"bound": [1, 1]}"#, r#""X": {"H": [[1, 0], [-1, 0], [0, 1], [0, -1]], "h": [1, 2, 1, 1]}"#);
        let err = RunConfig::from_json(&bad).unwrap_err();
        assert!(matches!(err, ConfigError::Invalid(ref m) if m.contains("0-symmetric")), "{err}");
    }

    #[test]
    fn rejects_bad_shapes_and_fields() {
        assert!(RunConfig::from_json(&EX.replace(r#""B": [[1, 0], [0, 1]]"#, r#""B": [[1, 0]]"#)).is_err());
        assert!(RunConfig::from_json(&EX.replace("\"horizon\"", "\"horizn\"")).is_err());
        assert!(RunConfig::from_json(&EX.replace(r#""restarts": 1"#, r#""restarts": 0"#)).is_err());
    }
}
