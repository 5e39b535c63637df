//! Convex piecewise-linear lower bound on the sample cloud.
//!
//! The last coordinate is modelled as `max_k α_kᵀx̃` with
//! `x̃ = [x₁, …, x_{n−1}, 1]`. Fitting alternates piece assignment with a
//! constrained least-squares QP; a line search on the segment back to the
//! previous model makes every outer iteration a descent step.

use std::fmt::Write as _;

use thiserror::Error;

use crate::io::fmt_f64;
use crate::mpc::SampleSet;
use crate::numerics::{dot, Matrix, Rng};
use crate::par;
use crate::solver::{solve_qp, QpProblem, SolveStatus, SolverError, DEFAULT_TOL};

pub const DEFAULT_EPS: f64 = 1e-6;
pub const DEFAULT_MAX_ITER: usize = 100;
pub const DEFAULT_DEPTH: usize = 30;
const PROX_WEIGHT: f64 = 1e-10;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PwlError {
    #[error("no samples with a non-positive last coordinate to fit")]
    EmptyFitSet,
    #[error("sample set has no I_0/I_N/I_P partition")]
    NotPartitioned,
    #[error("invalid fit input: {0}")]
    Invalid(String),
    #[error("model text: {0}")]
    Parse(String),
    #[error("fit QP: {0}")]
    Solver(#[from] SolverError),
}

/// `M` affine pieces acting on `x̃`.
#[derive(Debug, Clone, PartialEq)]
pub struct PwlModel {
    dim: usize,
    pieces: Vec<Vec<f64>>,
}

impl PwlModel {
    pub fn new(pieces: Vec<Vec<f64>>) -> Result<Self, PwlError> {
        let dim = pieces.first().map(Vec::len).ok_or_else(|| PwlError::Invalid("model needs at least one piece".into()))?;
        if dim == 0 || pieces.iter().any(|p| p.len() != dim || p.iter().any(|v| !v.is_finite())) {
            return Err(PwlError::Invalid(format!("every piece must have {dim} finite coefficients")));
        }
        Ok(Self { dim, pieces })
    }

    /// Number of coefficients per piece, i.e. the state dimension `n_x`.
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn n_pieces(&self) -> usize {
        self.pieces.len()
    }

    pub fn pieces(&self) -> &[Vec<f64>] {
        &self.pieces
    }

    /// Value of every piece at the augmented point `xt`.
    fn values<'a>(&'a self, xt: &'a [f64]) -> impl Iterator<Item = f64> + 'a {
        self.pieces.iter().map(move |a| dot(a, xt))
    }

    /// Index and value of the maximizing piece; ties go to the lowest index.
    fn argmax(&self, xt: &[f64]) -> (usize, f64) {
        let mut best = (0, f64::NEG_INFINITY);
        for (k, v) in self.values(xt).enumerate() {
            if v > best.1 {
                best = (k, v);
            }
        }
        best
    }

    /// Model value at the free coordinates `x` (length `n_x − 1`).
    pub fn evaluate(&self, x: &[f64]) -> f64 {
        assert_eq!(x.len() + 1, self.dim, "evaluate expects n_x - 1 coordinates");
        self.argmax(&augment(x)).1
    }

    fn flat(&self) -> Vec<f64> {
        self.pieces.concat()
    }

    fn lerp(&self, to: &PwlModel, theta: f64) -> PwlModel {
        let pieces = self
            .pieces
            .iter()
            .zip(&to.pieces)
            .map(|(a, b)| a.iter().zip(b).map(|(x, y)| x + theta * (y - x)).collect())
            .collect();
        PwlModel { dim: self.dim, pieces }
    }

    fn distance(&self, other: &PwlModel) -> f64 {
        self.flat().iter().zip(other.flat()).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt()
    }

    pub fn to_text(&self) -> String {
        let mut s = format!("{} {}\n", self.pieces.len(), self.dim);
        for p in &self.pieces {
            let row: Vec<String> = p.iter().map(|&v| fmt_f64(v)).collect();
            let _ = writeln!(s, "{}", row.join(" "));
        }
        s
    }

    pub fn from_text(text: &str) -> Result<Self, PwlError> {
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        let header = lines.next().ok_or_else(|| PwlError::Parse("missing header".into()))?;
        let dims: Vec<usize> = header
            .split_whitespace()
            .map(|t| t.parse().map_err(|_| PwlError::Parse(format!("bad header {header:?}"))))
            .collect::<Result<_, _>>()?;
        let [m, n] = dims[..] else {
            return Err(PwlError::Parse(format!("header must be `M n_x`, got {header:?}")));
        };
        let pieces: Vec<Vec<f64>> = lines
            .map(|l| {
                l.split_whitespace()
                    .map(|t| t.parse::<f64>().map_err(|_| PwlError::Parse(format!("bad number {t:?}"))))
                    .collect::<Result<Vec<f64>, _>>()
            })
            .collect::<Result<_, _>>()?;
        if pieces.len() != m || pieces.iter().any(|p| p.len() != n) {
            return Err(PwlError::Parse(format!("expected {m} rows of {n} coefficients")));
        }
        Self::new(pieces)
    }
}

fn augment(x: &[f64]) -> Vec<f64> {
    let mut v = x.to_vec();
    v.push(1.0);
    v
}

/// Fit targets and constraint points in augmented form.
///
/// `fit` points enter the objective; the lower-bound constraint
/// `α_kᵀx̃ ≤ y` is imposed on every `constrain` point (a superset of `fit`).
#[derive(Debug, Clone)]
pub struct FitData {
    dim: usize,
    fit_x: Vec<Vec<f64>>,
    fit_y: Vec<f64>,
    con_x: Vec<Vec<f64>>,
    con_y: Vec<f64>,
}

impl FitData {
    /// Splits full-dimensional points into `(x̃, y)` with `y` the last coordinate.
    pub fn new(fit: &[Vec<f64>], extra_constraints: &[Vec<f64>]) -> Result<Self, PwlError> {
        let dim = fit.first().map(Vec::len).ok_or(PwlError::EmptyFitSet)?;
        if dim < 2 {
            return Err(PwlError::Invalid("points need at least two coordinates".into()));
        }
        if fit.iter().chain(extra_constraints).any(|p| p.len() != dim || p.iter().any(|v| !v.is_finite())) {
            return Err(PwlError::Invalid(format!("every point must have {dim} finite coordinates")));
        }
        let split = |p: &Vec<f64>| (augment(&p[..dim - 1]), p[dim - 1]);
        let (fit_x, fit_y): (Vec<_>, Vec<_>) = fit.iter().map(split).unzip();
        let (mut con_x, mut con_y) = (fit_x.clone(), fit_y.clone());
        for p in extra_constraints {
            let (x, y) = split(p);
            con_x.push(x);
            con_y.push(y);
        }
        Ok(Self {
            dim,
            fit_x,
            fit_y,
            con_x,
            con_y,
        })
    }

    /// Fits `I_0 ∪ I_N` and constrains every sample, so the assembled set
    /// contains `I_P` as well.
    pub fn from_samples(s: &SampleSet) -> Result<Self, PwlError> {
        let part = s.partition_sets().ok_or(PwlError::NotPartitioned)?;
        let mut fit_idx: Vec<usize> = part.zero.iter().chain(&part.neg).copied().collect();
        fit_idx.sort_unstable();
        if fit_idx.is_empty() {
            return Err(PwlError::EmptyFitSet);
        }
        let pts = s.points();
        let fit: Vec<Vec<f64>> = fit_idx.iter().map(|&i| pts[i].clone()).collect();
        let extra: Vec<Vec<f64>> = part.pos.iter().map(|&i| pts[i].clone()).collect();
        Self::new(&fit, &extra)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn n_fit(&self) -> usize {
        self.fit_x.len()
    }

    pub fn n_constraints(&self) -> usize {
        self.con_x.len()
    }
}

/// `J = Σ (max_k α_kᵀx̃ᵢ − yᵢ)²` over the fit points.
pub fn objective(model: &PwlModel, data: &FitData) -> f64 {
    data.fit_x
        .iter()
        .zip(&data.fit_y)
        .map(|(x, y)| {
            let r = model.argmax(x).1 - y;
            r * r
        })
        .sum()
}

/// `Σ (α_{kᵢ}ᵀx̃ᵢ − yᵢ)²` for a fixed assignment.
pub fn objective_assigned(model: &PwlModel, data: &FitData, assignment: &[usize]) -> f64 {
    data.fit_x
        .iter()
        .zip(&data.fit_y)
        .zip(assignment)
        .map(|((x, y), &k)| {
            let r = dot(&model.pieces[k], x) - y;
            r * r
        })
        .sum()
}

/// Maximizing piece per fit point (ties to the lowest index).
pub fn assign(model: &PwlModel, data: &FitData) -> Vec<usize> {
    data.fit_x.iter().map(|x| model.argmax(x).0).collect()
}

/// Largest `α_kᵀx̃ − y` over pieces and constraint points.
pub fn max_violation(model: &PwlModel, data: &FitData) -> f64 {
    data.con_x
        .iter()
        .zip(&data.con_y)
        .map(|(x, y)| model.argmax(x).1 - y)
        .fold(f64::NEG_INFINITY, f64::max)
}

fn check_model(model: &PwlModel, data: &FitData) -> Result<(), PwlError> {
    if model.dim != data.dim {
        return Err(PwlError::Invalid(format!("model has {} coefficients per piece, data has dimension {}", model.dim, data.dim)));
    }
    Ok(())
}

/// Least-squares QP for a fixed assignment. The problem separates by piece;
/// each piece minimizes its own residuals subject to lying below every
/// constraint point. Pieces whose Hessian is singular (too few assigned
/// points) get a tiny proximal pull toward `anchor`'s piece. A piece whose QP
/// does not solve cleanly keeps the anchor's coefficients.
pub fn fit_qp(data: &FitData, assignment: &[usize], anchor: &PwlModel) -> Result<PwlModel, PwlError> {
    check_model(anchor, data)?;
    if assignment.len() != data.n_fit() || assignment.iter().any(|&k| k >= anchor.n_pieces()) {
        return Err(PwlError::Invalid("assignment does not match data and model".into()));
    }
    let n = data.dim;
    let mut con_a = Matrix::zeros(data.n_constraints(), n);
    for (i, x) in data.con_x.iter().enumerate() {
        con_a.row_mut(i).copy_from_slice(x);
    }
    let pieces = (0..anchor.n_pieces())
        .map(|k| {
            let mut h = Matrix::zeros(n, n);
            let mut c = vec![0.0; n];
            for ((x, y), _) in data.fit_x.iter().zip(&data.fit_y).zip(assignment).filter(|(_, &a)| a == k) {
                for r in 0..n {
                    c[r] -= 2.0 * y * x[r];
                    for s in 0..n {
                        h[(r, s)] += 2.0 * x[r] * x[s];
                    }
                }
            }
            let qp = QpProblem::new(h.clone(), c.clone(), con_a.clone(), data.con_y.clone());
            let out = match solve_qp(&qp, DEFAULT_TOL, 0) {
                Ok(out) => out,
                Err(SolverError::Hessian(_)) => {
                    let mu = PROX_WEIGHT * h.norm_inf().max(1.0);
                    let a0 = &anchor.pieces[k];
                    for r in 0..n {
                        h[(r, r)] += 2.0 * mu;
                        c[r] -= 2.0 * mu * a0[r];
                    }
                    solve_qp(&QpProblem::new(h, c, con_a.clone(), data.con_y.clone()), DEFAULT_TOL, 0)?
                }
                Err(e) => return Err(e.into()),
            };
            Ok(if out.status == SolveStatus::Optimal {
                out.point
            } else {
                anchor.pieces[k].clone()
            })
        })
        .collect::<Result<Vec<_>, PwlError>>()?;
    PwlModel::new(pieces)
}

/// Random feasible start: slopes uniform on `[−1, 1]` scaled by the ratio of
/// the target range to each coordinate range, offset lowered until no
/// constraint point lies below the piece.
pub fn initialize(data: &FitData, m: usize, rng: &mut Rng) -> Result<PwlModel, PwlError> {
    if m == 0 {
        return Err(PwlError::Invalid("M must be at least 1".into()));
    }
    let n = data.dim;
    let range = |vals: &mut dyn Iterator<Item = f64>| {
        let (lo, hi) = vals.fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), v| (l.min(v), h.max(v)));
        if hi > lo {
            hi - lo
        } else {
            1.0
        }
    };
    let y_range = range(&mut data.fit_y.iter().copied());
    let x_ranges: Vec<f64> = (0..n - 1).map(|j| range(&mut data.fit_x.iter().map(|x| x[j]))).collect();
    let pieces = (0..m)
        .map(|_| {
            let mut a: Vec<f64> = x_ranges.iter().map(|r| rng.uniform(-1.0, 1.0) * y_range / r).collect();
            a.push(0.0);
            let worst = data
                .con_x
                .iter()
                .zip(&data.con_y)
                .map(|(x, y)| dot(&a, x) - y)
                .fold(f64::NEG_INFINITY, f64::max);
            a[n - 1] -= worst.max(0.0);
            a
        })
        .collect();
    PwlModel::new(pieces)
}

#[derive(Debug, Clone)]
pub struct Descent {
    pub model: PwlModel,
    pub objective: f64,
    /// No strict improvement was found; `model` is the input model.
    pub converged: bool,
    /// The QP point did not improve `J` and the line search was used.
    pub safeguard: bool,
}

/// One outer iteration: assign, solve the QP, and fall back to halving the
/// step toward the QP point if the full step does not strictly decrease `J`.
pub fn descend_once(model0: &PwlModel, data: &FitData, depth: usize) -> Result<Descent, PwlError> {
    let j0 = objective(model0, data);
    let assignment = assign(model0, data);
    let target = fit_qp(data, &assignment, model0)?;
    let jq = objective(&target, data);
    if jq < j0 {
        return Ok(Descent {
            model: target,
            objective: jq,
            converged: false,
            safeguard: false,
        });
    }
    let mut theta = 1.0;
    for _ in 0..depth {
        theta *= 0.5;
        let probe = model0.lerp(&target, theta);
        let j = objective(&probe, data);
        if j < j0 {
            return Ok(Descent {
                model: probe,
                objective: j,
                converged: false,
                safeguard: true,
            });
        }
    }
    Ok(Descent {
        model: model0.clone(),
        objective: j0,
        converged: true,
        safeguard: true,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitConfig {
    pub m_candidates: Vec<usize>,
    pub restarts: usize,
    pub eps: f64,
    pub max_iter: usize,
    pub depth: usize,
    pub seed: u64,
}

impl Default for FitConfig {
    fn default() -> Self {
        Self {
            m_candidates: vec![2],
            restarts: 10,
            eps: DEFAULT_EPS,
            max_iter: DEFAULT_MAX_ITER,
            depth: DEFAULT_DEPTH,
            seed: 0,
        }
    }
}

impl FitConfig {
    pub fn validate(&self) -> Result<(), PwlError> {
        if self.m_candidates.is_empty() || self.m_candidates.contains(&0) {
            return Err(PwlError::Invalid("M candidates must be a non-empty list of positive counts".into()));
        }
        if self.restarts == 0 {
            return Err(PwlError::Invalid("restarts must be at least 1".into()));
        }
        if !(self.eps > 0.0) {
            return Err(PwlError::Invalid("eps must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RestartRecord {
    pub m: usize,
    pub restart: usize,
    /// `J` of the initial model followed by `J` after every outer iteration.
    pub trace: Vec<f64>,
    pub iterations: usize,
    pub safeguards: usize,
    /// Stopped by `ε` or a fixed point rather than the iteration cap.
    pub converged: bool,
}

impl RestartRecord {
    pub fn final_objective(&self) -> f64 {
        *self.trace.last().expect("trace holds the initial objective")
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitReport {
    pub runs: Vec<RestartRecord>,
    pub best_m: usize,
    pub best_restart: usize,
    pub best_objective: f64,
}

/// Alternating descent from a given start.
pub fn descend(mut model: PwlModel, data: &FitData, cfg: &FitConfig) -> Result<(PwlModel, Vec<f64>, usize, usize, bool), PwlError> {
    let mut trace = vec![objective(&model, data)];
    let mut safeguards = 0;
    for it in 0..cfg.max_iter {
        let step = descend_once(&model, data, cfg.depth)?;
        if step.safeguard {
            safeguards += 1;
        }
        if step.converged {
            return Ok((model, trace, it, safeguards, true));
        }
        let delta = model.distance(&step.model);
        model = step.model;
        trace.push(step.objective);
        if delta <= cfg.eps {
            return Ok((model, trace, it + 1, safeguards, true));
        }
    }
    Ok((model, trace, cfg.max_iter, safeguards, false))
}

/// Multi-start fit over every candidate `M`; returns the model with the
/// smallest `J` (ties: smaller `M`, then smaller restart index).
pub fn fit(data: &FitData, cfg: &FitConfig) -> Result<(PwlModel, FitReport), PwlError> {
    cfg.validate()?;
    if data.n_fit() == 0 {
        return Err(PwlError::EmptyFitSet);
    }
    let base = Rng::new(cfg.seed);
    let jobs: Vec<(usize, usize, usize)> = cfg
        .m_candidates
        .iter()
        .enumerate()
        .flat_map(|(mi, &m)| (0..cfg.restarts).map(move |r| (mi, m, r)))
        .collect();
    let results = par::map(&jobs, |&(mi, m, r)| -> Result<(PwlModel, RestartRecord), PwlError> {
        let mut rng = base.split(mi as u64).split(r as u64);
        let start = initialize(data, m, &mut rng)?;
        let (model, trace, iterations, safeguards, converged) = descend(start, data, cfg)?;
        Ok((
            model,
            RestartRecord {
                m,
                restart: r,
                trace,
                iterations,
                safeguards,
                converged,
            },
        ))
    });
    let results: Vec<(PwlModel, RestartRecord)> = results.into_iter().collect::<Result<_, _>>()?;
    let best = (0..results.len())
        .min_by(|&a, &b| {
            let (ra, rb) = (&results[a].1, &results[b].1);
            ra.final_objective()
                .total_cmp(&rb.final_objective())
                .then(ra.m.cmp(&rb.m))
                .then(ra.restart.cmp(&rb.restart))
        })
        .expect("at least one restart");
    let model = results[best].0.clone();
    let rec = &results[best].1;
    let report = FitReport {
        best_m: rec.m,
        best_restart: rec.restart,
        best_objective: rec.final_objective(),
        runs: results.into_iter().map(|(_, r)| r).collect(),
    };
    Ok((model, report))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn abs_model() -> PwlModel {
        PwlModel::new(vec![vec![1.0, 0.0], vec![-1.0, 0.0]]).unwrap()
    }

    fn data(points: &[[f64; 2]]) -> FitData {
        let pts: Vec<Vec<f64>> = points.iter().map(|p| p.to_vec()).collect();
        FitData::new(&pts, &[]).unwrap()
    }

    #[test]
    fn evaluate_and_assign() {
        let m = abs_model();
        assert_eq!(m.evaluate(&[-3.0]), 3.0);
        assert_eq!(m.evaluate(&[2.0]), 2.0);
        let d = data(&[[2.0, 2.0], [0.0, 0.0], [-1.0, 5.0]]);
        assert_eq!(assign(&m, &d), vec![0, 0, 1]);
        let c = PwlModel::new(vec![vec![0.0, 3.0]]).unwrap();
        assert_eq!(c.evaluate(&[17.0]), 3.0);
    }

    #[test]
    fn objective_two_ways() {
        let m = PwlModel::new(vec![vec![0.0, 1.0]]).unwrap();
        let d = data(&[[1.0, 0.0], [2.0, 0.0], [-4.0, 0.0]]);
        assert_eq!(objective(&m, &d), 3.0);
        let m = abs_model();
        let d = data(&[[1.0, 1.5], [-2.0, 2.5], [0.3, 0.0]]);
        assert_eq!(objective(&m, &d), objective_assigned(&m, &d, &assign(&m, &d)));
    }

    #[test]
    fn qp_recovers_abs() {
        let d = data(&[[-1.0, 1.0], [0.0, 0.0], [1.0, 1.0]]);
        let anchor = PwlModel::new(vec![vec![-0.5, -1.0], vec![0.5, -1.0]]).unwrap();
        let m = fit_qp(&d, &[0, 0, 1], &anchor).unwrap();
        assert!(objective_assigned(&m, &d, &[0, 0, 1]) < 1e-12);
        assert!(m.evaluate(&[0.0]).abs() < 1e-9);
        assert!((m.pieces()[0][0] + 1.0).abs() < 1e-6);
        assert!(max_violation(&m, &d) <= 1e-8);
    }

    #[test]
    fn hyperplane_is_exact() {
        let pts: Vec<[f64; 2]> = (0..8).map(|i| [i as f64 * 0.3 - 1.0, 0.5 * (i as f64 * 0.3 - 1.0) - 0.2]).collect();
        let d = data(&pts);
        let cfg = FitConfig {
            m_candidates: vec![1, 3],
            restarts: 3,
            ..FitConfig::default()
        };
        let (_, rep) = fit(&d, &cfg).unwrap();
        assert!(rep.best_objective <= 1e-12);
    }

    #[test]
    fn initialize_is_feasible_and_seeded() {
        let d = data(&[[-1.0, 1.0], [0.0, -0.5], [2.0, 3.0], [1.0, 0.2]]);
        let a = initialize(&d, 4, &mut Rng::new(9)).unwrap();
        let b = initialize(&d, 4, &mut Rng::new(9)).unwrap();
        assert_eq!(a, b);
        assert!(max_violation(&a, &d) <= 1e-12);
        for i in 0..4 {
            for j in 0..i {
                assert_ne!(a.pieces()[i], a.pieces()[j]);
            }
        }
    }

    #[test]
    fn fixed_point_is_converged() {
        let d = data(&[[-1.0, 1.0], [0.0, 0.0], [1.0, 1.0]]);
        let step = descend_once(&abs_model(), &d, DEFAULT_DEPTH).unwrap();
        assert!(step.converged);
        assert_eq!(step.model, abs_model());
    }

    #[test]
    fn text_round_trip() {
        let m = PwlModel::new(vec![vec![0.1, -2.0 / 3.0, 1e-300], vec![3.0, 0.0, -7.25]]).unwrap();
        assert_eq!(PwlModel::from_text(&m.to_text()).unwrap(), m);
        assert!(PwlModel::from_text("2 3\n1 2 3\n").is_err());
    }
}
