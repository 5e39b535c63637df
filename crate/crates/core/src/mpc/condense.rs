use super::MpcError;
use crate::geometry::Polyhedron;
use crate::numerics::{cholesky, dot, Matrix};
use crate::solver::{DualActiveSet, QpProblem, SolveOutcome, SolveStatus, DEFAULT_TOL};

/// `x⁺ = A·x + B·u`
#[derive(Debug, Clone)]
pub struct LinearSystem {
    pub a: Matrix,
    pub b: Matrix,
}

impl LinearSystem {
    pub fn new(a: Matrix, b: Matrix) -> Result<Self, MpcError> {
        if a.rows() != a.cols() || b.rows() != a.rows() {
            return Err(MpcError::Invalid(format!(
                "A is {}x{}, B is {}x{}",
                a.rows(),
                a.cols(),
                b.rows(),
                b.cols()
            )));
        }
        Ok(Self { a, b })
    }

    pub fn nx(&self) -> usize {
        self.a.rows()
    }

    pub fn nu(&self) -> usize {
        self.b.cols()
    }

    pub fn step(&self, x: &[f64], u: &[f64]) -> Vec<f64> {
        let mut next = self.a.mat_vec(x);
        for (n, bu) in next.iter_mut().zip(self.b.mat_vec(u)) {
            *n += bu;
        }
        next
    }
}

/// Finite-horizon MPC: `min x_Nᵀ P x_N + Σ x_kᵀQx_k + u_kᵀRu_k` with
/// `x_k ∈ X (k = 1..N)` and `u_k ∈ U`.
#[derive(Debug, Clone)]
pub struct MpcProblem {
    pub system: LinearSystem,
    pub q: Matrix,
    pub r: Matrix,
    pub p: Matrix,
    pub horizon: usize,
    pub state_set: Polyhedron,
    pub input_set: Polyhedron,
}

fn check_psd(name: &str, m: &Matrix, n: usize, strict: bool) -> Result<(), MpcError> {
    if m.rows() != n || m.cols() != n {
        return Err(MpcError::Invalid(format!("{name} must be {n}x{n}, got {}x{}", m.rows(), m.cols())));
    }
    if !m.is_symmetric(1e-12) {
        return Err(MpcError::Invalid(format!("{name} must be symmetric")));
    }
    let shifted = if strict {
        m.clone()
    } else {
        m.add(&Matrix::identity(n).scaled(1e-10 * (1.0 + m.max_abs())))
    };
    cholesky(&shifted).map_err(|_| {
        MpcError::Invalid(format!(
            "{name} must be positive {}definite",
            if strict { "" } else { "semi-" }
        ))
    })?;
    Ok(())
}

impl MpcProblem {
    pub fn new(
        system: LinearSystem,
        q: Matrix,
        r: Matrix,
        p: Matrix,
        horizon: usize,
        state_set: Polyhedron,
        input_set: Polyhedron,
    ) -> Result<Self, MpcError> {
        let mpc = Self {
            system,
            q,
            r,
            p,
            horizon,
            state_set,
            input_set,
        };
        mpc.validate()?;
        Ok(mpc)
    }

    pub fn validate(&self) -> Result<(), MpcError> {
        let (nx, nu) = (self.system.nx(), self.system.nu());
        check_psd("Q", &self.q, nx, false)?;
        check_psd("P", &self.p, nx, false)?;
        check_psd("R", &self.r, nu, true)?;
        if self.horizon == 0 {
            return Err(MpcError::Invalid("horizon must be at least 1".into()));
        }
        for (name, set, dim) in [("X", &self.state_set, nx), ("U", &self.input_set, nu)] {
            if set.dim() != dim {
                return Err(MpcError::Invalid(format!("{name} has dimension {}, expected {dim}", set.dim())));
            }
            if !set.is_zero_symmetric(1e-12) {
                return Err(MpcError::Invalid(format!("{name} is not 0-symmetric")));
            }
            if set.b().iter().any(|b| *b <= 0.0) {
                return Err(MpcError::Invalid(format!("{name} must contain the origin in its interior")));
            }
        }
        Ok(())
    }

    pub fn nx(&self) -> usize {
        self.system.nx()
    }

    pub fn nu(&self) -> usize {
        self.system.nu()
    }

    /// Substitutes `x_k = A^k x₀ + Σ_{j<k} A^{k−1−j} B u_j` to obtain a QP in
    /// `U = [u₀; …; u_{N−1}]`.
    pub fn condense(&self) -> Result<CondensedQp, MpcError> {
        let (nx, nu, n) = (self.nx(), self.nu(), self.horizon);
        let nv = nu * n;
        let a = &self.system.a;
        let b = &self.system.b;

        // powers A^0..A^N
        let mut pows = vec![Matrix::identity(nx)];
        for k in 1..=n {
            pows.push(a.matmul(&pows[k - 1]));
        }
        // Φ (N·nx × nx) and Γ (N·nx × N·nu), block row k-1 holds x_k
        let mut phi = Matrix::zeros(n * nx, nx);
        let mut gamma = Matrix::zeros(n * nx, nv);
        for k in 1..=n {
            phi.set_block((k - 1) * nx, 0, &pows[k]);
            for j in 0..k {
                gamma.set_block((k - 1) * nx, j * nu, &pows[k - 1 - j].matmul(b));
            }
        }
        let mut qbar = Matrix::zeros(n * nx, n * nx);
        for k in 0..n {
            let w = if k + 1 == n { &self.p } else { &self.q };
            qbar.set_block(k * nx, k * nx, w);
        }
        let mut rbar = Matrix::zeros(nv, nv);
        for k in 0..n {
            rbar.set_block(k * nu, k * nu, &self.r);
        }
        let gt_q = gamma.transpose().matmul(&qbar);
        let mut hessian = gt_q.matmul(&gamma).add(&rbar).scaled(2.0);
        // exact symmetry for the factorization
        for i in 0..nv {
            for j in 0..i {
                let v = 0.5 * (hessian[(i, j)] + hessian[(j, i)]);
                hessian[(i, j)] = v;
                hessian[(j, i)] = v;
            }
        }
        let linear_map = gt_q.matmul(&phi).scaled(2.0);
        let constant_map = phi.transpose().matmul(&qbar).matmul(&phi).add(&self.q);

        let hx = self.state_set.a();
        let hu = self.input_set.a();
        let (mx, mu) = (hx.rows(), hu.rows());
        let m = n * (mx + mu);
        let mut g = Matrix::zeros(m, nv);
        let mut w = vec![0.0; m];
        let mut e = Matrix::zeros(m, nx);
        for k in 1..=n {
            let r0 = (k - 1) * mx;
            let gk = gamma_block_row(&gamma, k - 1, nx);
            g.set_block(r0, 0, &hx.matmul(&gk));
            e.set_block(r0, 0, &hx.matmul(&pows[k]).scaled(-1.0));
            w[r0..r0 + mx].copy_from_slice(self.state_set.b());
        }
        for k in 0..n {
            let r0 = n * mx + k * mu;
            g.set_block(r0, k * nu, hu);
            w[r0..r0 + mu].copy_from_slice(self.input_set.b());
        }
        let solver = DualActiveSet::new(&hessian)?;
        Ok(CondensedQp {
            nx,
            nu,
            hessian,
            linear_map,
            constant_map,
            g,
            w,
            e,
            solver,
        })
    }
}

fn gamma_block_row(gamma: &Matrix, k: usize, nx: usize) -> Matrix {
    let rows: Vec<usize> = (k * nx..(k + 1) * nx).collect();
    gamma.select_rows(&rows)
}

/// QP template parameterized by the initial state:
/// `min ½UᵀHU + (F·x₀)ᵀU + x₀ᵀC x₀  s.t.  G·U ≤ w + E·x₀`.
#[derive(Debug, Clone)]
pub struct CondensedQp {
    nx: usize,
    nu: usize,
    pub hessian: Matrix,
    pub linear_map: Matrix,
    pub constant_map: Matrix,
    pub g: Matrix,
    pub w: Vec<f64>,
    pub e: Matrix,
    solver: DualActiveSet,
}

/// First input of the optimal sequence, the successor state and the
/// optimal MPC cost at `x`.
#[derive(Debug, Clone)]
pub struct ClosedLoopStep {
    pub input: Vec<f64>,
    pub next: Vec<f64>,
    pub cost: f64,
}

impl CondensedQp {
    pub fn n_vars(&self) -> usize {
        self.hessian.rows()
    }

    pub fn qp_at(&self, x0: &[f64]) -> QpProblem {
        QpProblem::new(self.hessian.clone(), self.linear_map.mat_vec(x0), self.g.clone(), self.rhs_at(x0))
    }

    fn rhs_at(&self, x0: &[f64]) -> Vec<f64> {
        self.w.iter().zip(self.e.mat_vec(x0)).map(|(w, e)| w + e).collect()
    }

    /// Solves the QP at `x0`; the objective includes the constant term so it
    /// equals the MPC cost.
    pub fn solve_at(&self, x0: &[f64]) -> Result<SolveOutcome, MpcError> {
        let linear = self.linear_map.mat_vec(x0);
        let mut out = self.solver.solve(&linear, &self.g, &self.rhs_at(x0), DEFAULT_TOL, 0)?;
        if out.is_optimal() {
            out.objective += dot(x0, &self.constant_map.mat_vec(x0));
        }
        Ok(out)
    }

    pub fn step(&self, system: &LinearSystem, x: &[f64]) -> Result<ClosedLoopStep, MpcError> {
        debug_assert_eq!(x.len(), self.nx);
        let out = self.solve_at(x)?;
        match out.status {
            SolveStatus::Optimal => {
                let input = out.point[..self.nu].to_vec();
                let next = system.step(x, &input);
                Ok(ClosedLoopStep {
                    input,
                    next,
                    cost: out.objective,
                })
            }
            SolveStatus::Infeasible => Err(MpcError::Infeasible),
            s => Err(MpcError::Invalid(format!("closed-loop QP ended with {s:?}"))),
        }
    }
}
