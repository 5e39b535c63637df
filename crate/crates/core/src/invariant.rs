//! Polyhedral set assembly, control-invariance certification and the exact
//! backward-reachability oracle.

use thiserror::Error;

use crate::geometry::{project, remove_redundant, vertices, GeometryError, Polyhedron, DEFAULT_TOL};
use crate::mpc::LinearSystem;
use crate::numerics::{norm_inf, Matrix};
use crate::par;
use crate::pwl::PwlModel;
use crate::solver::{solve_lp, LpProblem, SolveStatus, SolverError};

pub const CONTAIN_TOL: f64 = 1e-8;
pub const DEFAULT_ORACLE_ITERS: usize = 50;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum InvariantError {
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("certification LP at vertex {vertex} ended with {status:?}")]
    Certification { vertex: usize, status: SolveStatus },
    #[error("geometry: {0}")]
    Geometry(#[from] GeometryError),
    #[error("LP: {0}")]
    Solver(#[from] SolverError),
}

#[derive(Debug, Clone)]
pub struct Assembly {
    /// `[P; −P]` stacked on X, before redundancy removal.
    pub raw: Polyhedron,
    pub set: Polyhedron,
}

/// Each piece `α_kᵀx̃ ≤ x_n` becomes the row `[α_{k,1..n−1}, −1]·x ≤ −α_{k,n}`;
/// the rows, their negations and X are stacked and reduced.
pub fn assemble(model: &PwlModel, x_set: &Polyhedron) -> Result<Assembly, InvariantError> {
    let n = model.dim();
    if x_set.dim() != n {
        return Err(InvariantError::Dimension(format!("model is {n}-dimensional, X is {}-dimensional", x_set.dim())));
    }
    let mut a = Matrix::empty(n);
    let mut b = Vec::new();
    for sign in [1.0, -1.0] {
        for p in model.pieces() {
            let mut row: Vec<f64> = p[..n - 1].iter().map(|v| sign * v).collect();
            row.push(-sign);
            a.push_row(&row);
            b.push(-p[n - 1]);
        }
    }
    let raw = Polyhedron::new(a, b)?.intersect(x_set);
    let set = remove_redundant(&raw, DEFAULT_TOL)?;
    Ok(Assembly { raw, set })
}

#[derive(Debug, Clone)]
pub struct Certification {
    pub vertices: Vec<Vec<f64>>,
    /// Optimal slack `s*` per vertex; `≤ 0` means some admissible input keeps
    /// the successor inside the set.
    pub slack: Vec<f64>,
    pub max_violation: f64,
}

impl Certification {
    pub fn is_invariant(&self, tol: f64) -> bool {
        self.max_violation <= tol
    }
}

fn check_system(sys: &LinearSystem, omega: &Polyhedron, u_set: &Polyhedron) -> Result<(), InvariantError> {
    if omega.dim() != sys.nx() || u_set.dim() != sys.nu() {
        return Err(InvariantError::Dimension(format!(
            "system has nx={}, nu={}; set is {}-dimensional, U is {}-dimensional",
            sys.nx(),
            sys.nu(),
            omega.dim(),
            u_set.dim()
        )));
    }
    Ok(())
}

/// For each vertex `v` of Ω (rows normalized) solves
/// `min s  s.t.  H(Av + Bu) ≤ h + s·1,  u ∈ U`.
/// Invariance at the vertices extends to all of Ω by convexity.
pub fn certify_invariance(omega: &Polyhedron, sys: &LinearSystem, u_set: &Polyhedron) -> Result<Certification, InvariantError> {
    check_system(sys, omega, u_set)?;
    let h = omega.normalized();
    let (lo, hi) = h.bounding_box()?;
    if lo.iter().chain(&hi).all(|v| v.abs() <= 1e-12) {
        let v = vec![0.0; sys.nx()];
        let s = h.max_violation(&sys.a.mat_vec(&v)).max(0.0);
        return Ok(Certification {
            vertices: vec![v],
            slack: vec![s],
            max_violation: s,
        });
    }
    let verts = vertices(&h, DEFAULT_TOL)?;
    let nu = sys.nu();
    let hb = h.a().matmul(&sys.b);
    let mut ineq = Matrix::zeros(h.n_rows() + u_set.n_rows(), nu + 1);
    for i in 0..h.n_rows() {
        ineq.row_mut(i)[..nu].copy_from_slice(hb.row(i));
        ineq[(i, nu)] = -1.0;
    }
    for i in 0..u_set.n_rows() {
        ineq.row_mut(h.n_rows() + i)[..nu].copy_from_slice(u_set.a().row(i));
    }
    let mut cost = vec![0.0; nu + 1];
    cost[nu] = 1.0;
    let results = par::map(&verts, |v| -> Result<(f64, SolveStatus), SolverError> {
        let hav = h.a().mat_vec(&sys.a.mat_vec(v));
        let mut rhs: Vec<f64> = h.b().iter().zip(&hav).map(|(b, a)| b - a).collect();
        rhs.extend_from_slice(u_set.b());
        let out = solve_lp(&LpProblem::new(cost.clone(), ineq.clone(), rhs), DEFAULT_TOL, 0)?;
        Ok((out.objective, out.status))
    });
    let mut slack = Vec::with_capacity(verts.len());
    for (k, r) in results.into_iter().enumerate() {
        let (s, status) = r?;
        if status != SolveStatus::Optimal {
            return Err(InvariantError::Certification { vertex: k, status });
        }
        slack.push(s);
    }
    let max_violation = slack.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    Ok(Certification {
        vertices: verts,
        slack,
        max_violation,
    })
}

/// `{x : ∃u ∈ U, Ax + Bu ∈ S}` by Fourier–Motzkin projection of the lifted set.
pub fn pre(s: &Polyhedron, sys: &LinearSystem, u_set: &Polyhedron) -> Result<Polyhedron, InvariantError> {
    check_system(sys, s, u_set)?;
    let (nx, nu) = (sys.nx(), sys.nu());
    let ha = s.a().matmul(&sys.a);
    let hb = s.a().matmul(&sys.b);
    let mut lifted = Matrix::zeros(s.n_rows() + u_set.n_rows(), nx + nu);
    for i in 0..s.n_rows() {
        lifted.row_mut(i)[..nx].copy_from_slice(ha.row(i));
        lifted.row_mut(i)[nx..].copy_from_slice(hb.row(i));
    }
    for i in 0..u_set.n_rows() {
        lifted.row_mut(s.n_rows() + i)[nx..].copy_from_slice(u_set.a().row(i));
    }
    let mut rhs = s.b().to_vec();
    rhs.extend_from_slice(u_set.b());
    let keep: Vec<usize> = (0..nx).collect();
    Ok(project(&Polyhedron::new(lifted, rhs)?, &keep)?)
}

#[derive(Debug, Clone)]
pub struct OracleResult {
    pub set: Polyhedron,
    pub iterations: usize,
    pub converged: bool,
}

/// `Ω₀ = X`, `Ω_{t+1} = Pre(Ω_t) ∩ X`, stopping once `Ω_t ⊆ Ω_{t+1}`.
/// Hitting `max_iters` returns the last iterate with `converged = false`.
pub fn maximal_ci_oracle(
    sys: &LinearSystem,
    x_set: &Polyhedron,
    u_set: &Polyhedron,
    max_iters: usize,
    tol: f64,
) -> Result<OracleResult, InvariantError> {
    let mut omega = remove_redundant(x_set, DEFAULT_TOL)?;
    for it in 1..=max_iters {
        let next = remove_redundant(&pre(&omega, sys, u_set)?.intersect(x_set), DEFAULT_TOL)?;
        let done = omega.is_subset_of(&next, tol)?;
        omega = next;
        if done {
            return Ok(OracleResult {
                set: omega,
                iterations: it,
                converged: true,
            });
        }
    }
    Ok(OracleResult {
        set: omega,
        iterations: max_iters,
        converged: false,
    })
}

/// Fraction of `points` inside Ω at tolerance [`CONTAIN_TOL`] (1 for none).
pub fn containment_stats(omega: &Polyhedron, points: &[Vec<f64>]) -> f64 {
    if points.is_empty() {
        return 1.0;
    }
    let inside = par::map(points, |p| omega.contains(p, CONTAIN_TOL));
    inside.iter().filter(|&&b| b).count() as f64 / points.len() as f64
}

/// Largest `‖v‖∞` over the vertices of Ω, with the containment check of every
/// vertex in `x_set`.
pub fn vertices_inside(omega: &Polyhedron, x_set: &Polyhedron, tol: f64) -> Result<(bool, f64), InvariantError> {
    let verts = vertices(omega, DEFAULT_TOL)?;
    let radius = verts.iter().map(|v| norm_inf(v)).fold(0.0, f64::max);
    Ok((verts.iter().all(|v| x_set.contains(v, tol)), radius))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::area_2d;

    fn ex1() -> (LinearSystem, Polyhedron, Polyhedron) {
        let sys = LinearSystem::new(
            Matrix::from_rows(&[[2.0, 1.0], [-1.0, 2.0]]).unwrap(),
            Matrix::identity(2),
        )
        .unwrap();
        let b = Polyhedron::symmetric_box(&[1.0, 1.0]).unwrap();
        (sys, b.clone(), b)
    }

    #[test]
    fn constant_piece_gives_slab() {
        let model = PwlModel::new(vec![vec![0.0, -0.5]]).unwrap();
        let x = Polyhedron::symmetric_box(&[1.0, 1.0]).unwrap();
        let asm = assemble(&model, &x).unwrap();
        assert_eq!(asm.raw.n_rows(), 6);
        assert!(asm.set.is_zero_symmetric(1e-12));
        assert!(asm.set.contains(&[0.9, 0.5], 1e-12));
        assert!(!asm.set.contains(&[0.0, 0.6], 1e-9));
        assert!((area_2d(&asm.set).unwrap() - 2.0).abs() < 1e-9);
    }

    #[test]
    fn contraction_keeps_box() {
        let sys = LinearSystem::new(Matrix::identity(2).scaled(0.5), Matrix::zeros(2, 1)).unwrap();
        let x = Polyhedron::symmetric_box(&[1.0, 2.0]).unwrap();
        let u = Polyhedron::symmetric_box(&[1.0]).unwrap();
        let res = maximal_ci_oracle(&sys, &x, &u, 10, 1e-9).unwrap();
        assert!(res.converged);
        assert!(res.set.is_subset_of(&x, 1e-9).unwrap() && x.is_subset_of(&res.set, 1e-9).unwrap());
        assert!(certify_invariance(&res.set, &sys, &u).unwrap().is_invariant(1e-9));
    }

    #[test]
    fn box_is_not_invariant_for_ex1() {
        let (sys, x, u) = ex1();
        let cert = certify_invariance(&x, &sys, &u).unwrap();
        // at (1, 1): A v = (3, 1), best u = (−1, −1) reaches (2, 0)
        assert!((cert.max_violation - 1.0).abs() < 1e-9);
    }

    #[test]
    fn ex1_oracle_is_invariant() {
        let (sys, x, u) = ex1();
        let res = maximal_ci_oracle(&sys, &x, &u, DEFAULT_ORACLE_ITERS, 1e-9).unwrap();
        assert!(res.converged);
        assert!(certify_invariance(&res.set, &sys, &u).unwrap().max_violation <= 1e-8);
        assert!(res.set.is_zero_symmetric(1e-9));
    }

    #[test]
    fn origin_only_set() {
        let (sys, _, u) = ex1();
        let zero = Polyhedron::symmetric_box(&[0.0, 0.0]).unwrap();
        let cert = certify_invariance(&zero, &sys, &u).unwrap();
        assert_eq!(cert.vertices, vec![vec![0.0, 0.0]]);
        assert!(cert.max_violation <= 0.0);
    }

    #[test]
    fn containment_fraction() {
        let x = Polyhedron::symmetric_box(&[1.0, 1.0]).unwrap();
        assert_eq!(containment_stats(&x, &[]), 1.0);
        let pts = vec![vec![0.5, 0.5], vec![2.0, 0.0], vec![-1.0, 1.0], vec![0.0, -1.5]];
        assert_eq!(containment_stats(&x, &pts), 0.5);
    }
}
