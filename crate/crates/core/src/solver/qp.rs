use super::{default_max_iter, SolveOutcome, SolveStatus, SolverError};
use crate::numerics::{cholesky, dot, Matrix};

/// `min ½xᵀHx + cᵀx  s.t.  A·x ≤ b`
#[derive(Debug, Clone)]
pub struct QpProblem {
    pub hessian: Matrix,
    pub linear: Vec<f64>,
    pub ineq_a: Matrix,
    pub ineq_b: Vec<f64>,
}

impl QpProblem {
    pub fn new(hessian: Matrix, linear: Vec<f64>, ineq_a: Matrix, ineq_b: Vec<f64>) -> Self {
        Self {
            hessian,
            linear,
            ineq_a,
            ineq_b,
        }
    }

    pub fn unconstrained(hessian: Matrix, linear: Vec<f64>) -> Self {
        let n = linear.len();
        Self::new(hessian, linear, Matrix::empty(n), Vec::new())
    }

    fn check(&self) -> Result<(), SolverError> {
        let n = self.linear.len();
        if self.hessian.rows() != n || self.hessian.cols() != n {
            return Err(SolverError::Dimension(format!(
                "hessian is {}x{}, linear term has {n} entries",
                self.hessian.rows(),
                self.hessian.cols()
            )));
        }
        if self.ineq_a.cols() != n || self.ineq_a.rows() != self.ineq_b.len() {
            return Err(SolverError::Dimension(format!(
                "constraint matrix {}x{} vs rhs {} and {n} variables",
                self.ineq_a.rows(),
                self.ineq_a.cols(),
                self.ineq_b.len()
            )));
        }
        if !self.hessian.is_symmetric(1e-12) {
            return Err(SolverError::Dimension("hessian is not symmetric".into()));
        }
        Ok(())
    }
}

/// Solves a strictly convex QP. See [`DualActiveSet`].
pub fn solve_qp(p: &QpProblem, tol: f64, max_iter: usize) -> Result<SolveOutcome, SolverError> {
    p.check()?;
    DualActiveSet::new(&p.hessian)?.solve(&p.linear, &p.ineq_a, &p.ineq_b, tol, max_iter)
}

/// Goldfarb–Idnani dual active-set solver with a factored hessian.
///
/// The factorization `J = L⁻ᵀ` is computed once, so repeated solves with the
/// same hessian (closed-loop MPC, one QP per visited state) skip it.
#[derive(Debug, Clone)]
pub struct DualActiveSet {
    hessian: Matrix,
    /// `L⁻ᵀ`, upper triangular.
    j0: Matrix,
}

impl DualActiveSet {
    pub fn new(hessian: &Matrix) -> Result<Self, SolverError> {
        let chol = cholesky(hessian)?;
        let n = hessian.rows();
        // columns of L⁻ᵀ are rows of L⁻¹, i.e. solutions of L·y = e_k
        let mut j0 = Matrix::zeros(n, n);
        for k in 0..n {
            let mut e = vec![0.0; n];
            e[k] = 1.0;
            let y = chol.solve_lower(&e);
            for (i, v) in y.iter().enumerate() {
                j0[(k, i)] = *v;
            }
        }
        Ok(Self {
            hessian: hessian.clone(),
            j0,
        })
    }

    pub fn dim(&self) -> usize {
        self.hessian.rows()
    }

    pub fn solve(
        &self,
        linear: &[f64],
        a: &Matrix,
        b: &[f64],
        tol: f64,
        max_iter: usize,
    ) -> Result<SolveOutcome, SolverError> {
        if !(tol > 0.0) {
            return Err(SolverError::Tolerance);
        }
        let n = self.dim();
        let m = a.rows();
        if linear.len() != n || a.cols() != n || b.len() != m {
            return Err(SolverError::Dimension(format!(
                "{n} variables, linear {}, constraints {}x{}, rhs {}",
                linear.len(),
                a.rows(),
                a.cols(),
                b.len()
            )));
        }
        let max_iter = if max_iter == 0 { default_max_iter(n, m) } else { max_iter };

        let mut j = self.j0.clone();
        // x = -H⁻¹c = -J Jᵀ c
        let jt_c = j.t_mat_vec(linear);
        let mut x: Vec<f64> = j.mat_vec(&jt_c).iter().map(|v| -v).collect();

        let mut r = Matrix::zeros(n, n);
        let mut active: Vec<usize> = Vec::with_capacity(n);
        let mut is_active = vec![false; m];
        let mut u: Vec<f64> = Vec::with_capacity(n + 1);
        let row_scale: Vec<f64> = (0..m)
            .map(|i| a.row(i).iter().fold(0.0, |s, v| s + v.abs()))
            .collect();

        let mut iterations = 0usize;
        loop {
            // most violated constraint, ties to lowest index
            let x_scale = x.iter().fold(0.0f64, |s, v| s.max(v.abs()));
            let mut pick: Option<(usize, f64)> = None;
            for i in 0..m {
                if is_active[i] {
                    continue;
                }
                let viol = dot(a.row(i), &x) - b[i];
                let thresh = 1e-13 * (1.0 + b[i].abs() + row_scale[i] * x_scale);
                if viol > thresh && pick.map_or(true, |(_, v)| viol > v) {
                    pick = Some((i, viol));
                }
            }
            let Some((p, _)) = pick else {
                let mut mult = vec![0.0; m];
                for (k, &i) in active.iter().enumerate() {
                    mult[i] = u[k];
                }
                return Ok(self.finish(linear, a, b, x, mult, iterations, tol));
            };

            let np: Vec<f64> = a.row(p).iter().map(|v| -v).collect();
            u.push(0.0);
            loop {
                iterations += 1;
                if iterations > max_iter {
                    return Ok(SolveOutcome::failed(SolveStatus::IterLimit, n, m, iterations));
                }
                let q = active.len();
                let d = j.t_mat_vec(&np);
                let mut z = vec![0.0; n];
                for (col, dc) in d.iter().enumerate().skip(q) {
                    if *dc != 0.0 {
                        for (row, zr) in z.iter_mut().enumerate() {
                            *zr += j[(row, col)] * dc;
                        }
                    }
                }
                // r = R⁻¹ d₁
                let mut rv = vec![0.0; q];
                for i in (0..q).rev() {
                    let s: f64 = (i + 1..q).map(|k| r[(i, k)] * rv[k]).sum();
                    rv[i] = (d[i] - s) / r[(i, i)];
                }

                let mut t1 = f64::INFINITY;
                let mut drop_at = None;
                for k in 0..q {
                    if rv[k] > 0.0 {
                        let ratio = u[k] / rv[k];
                        if ratio < t1 {
                            t1 = ratio;
                            drop_at = Some(k);
                        }
                    }
                }

                let d_norm2: f64 = d.iter().map(|v| v * v).sum();
                let d2_norm2: f64 = d[q..].iter().map(|v| v * v).sum();
                let slack = dot(&np, &x) + b[p];
                let t2 = if d2_norm2 <= 1e-20 * d_norm2.max(f64::MIN_POSITIVE) {
                    f64::INFINITY
                } else {
                    -slack / dot(&z, &np)
                };

                if t1.is_infinite() && t2.is_infinite() {
                    return Ok(SolveOutcome::failed(SolveStatus::Infeasible, n, m, iterations));
                }
                if t2.is_infinite() {
                    for k in 0..q {
                        u[k] -= t1 * rv[k];
                    }
                    u[q] += t1;
                    let l = drop_at.expect("finite partial step has a blocking index");
                    drop_constraint(&mut j, &mut r, q, l);
                    is_active[active.remove(l)] = false;
                    u.remove(l);
                    continue;
                }
                let t = t1.min(t2);
                for (xi, zi) in x.iter_mut().zip(&z) {
                    *xi += t * zi;
                }
                for k in 0..q {
                    u[k] -= t * rv[k];
                }
                u[q] += t;
                if t2 <= t1 {
                    add_constraint(&mut j, &mut r, q, d);
                    active.push(p);
                    is_active[p] = true;
                    break;
                }
                let l = drop_at.expect("partial step has a blocking index");
                drop_constraint(&mut j, &mut r, q, l);
                is_active[active.remove(l)] = false;
                u.remove(l);
            }
        }
    }

    #[allow(clippy::too_many_arguments)]
    fn finish(
        &self,
        linear: &[f64],
        a: &Matrix,
        b: &[f64],
        x: Vec<f64>,
        multipliers: Vec<f64>,
        iterations: usize,
        tol: f64,
    ) -> SolveOutcome {
        let hx = self.hessian.mat_vec(&x);
        let objective = 0.5 * dot(&x, &hx) + dot(linear, &x);
        let kkt_residual = kkt_residual(&hx, linear, a, b, &x, &multipliers);
        let status = if kkt_residual <= tol {
            SolveStatus::Optimal
        } else {
            SolveStatus::IterLimit
        };
        SolveOutcome {
            status,
            point: x,
            objective,
            kkt_residual,
            iterations,
            multipliers,
        }
    }
}

/// Scaled KKT residual for `min ½xᵀHx + cᵀx, A·x ≤ b` at `(x, λ)`:
/// the maximum of stationarity, primal infeasibility, dual infeasibility and
/// complementarity, each relative to the magnitude of the terms involved.
pub(crate) fn kkt_residual(hx: &[f64], c: &[f64], a: &Matrix, b: &[f64], x: &[f64], lambda: &[f64]) -> f64 {
    let at_l = a.t_mat_vec(lambda);
    let mut res: f64 = 0.0;
    let mut stat_scale: f64 = 1.0;
    for i in 0..x.len() {
        stat_scale = stat_scale.max(hx[i].abs()).max(c[i].abs()).max(at_l[i].abs());
    }
    for i in 0..x.len() {
        res = res.max((hx[i] + c[i] + at_l[i]).abs() / stat_scale);
    }
    for (i, row) in a.row_iter().enumerate() {
        let ax = dot(row, x);
        let scale = 1.0f64.max(b[i].abs());
        let slack = b[i] - ax;
        res = res.max((-slack).max(0.0) / scale);
        res = res.max((-lambda[i]).max(0.0));
        res = res.max((lambda[i] * slack).abs() / (scale * 1.0f64.max(lambda[i].abs())));
    }
    res
}

fn add_constraint(j: &mut Matrix, r: &mut Matrix, q: usize, mut d: Vec<f64>) {
    let n = j.rows();
    for col in (q + 1..n).rev() {
        let (a0, b0) = (d[col - 1], d[col]);
        if b0 == 0.0 {
            continue;
        }
        let h = a0.hypot(b0);
        let (c, s) = (a0 / h, b0 / h);
        d[col - 1] = h;
        d[col] = 0.0;
        for row in 0..n {
            let (x0, x1) = (j[(row, col - 1)], j[(row, col)]);
            j[(row, col - 1)] = c * x0 + s * x1;
            j[(row, col)] = -s * x0 + c * x1;
        }
    }
    for (i, di) in d.iter().enumerate().take(q + 1) {
        r[(i, q)] = *di;
    }
}

/// Removes active constraint `l` of `q` and restores R to upper-triangular.
fn drop_constraint(j: &mut Matrix, r: &mut Matrix, q: usize, l: usize) {
    let n = j.rows();
    for col in l..q - 1 {
        for row in 0..q {
            r[(row, col)] = r[(row, col + 1)];
        }
    }
    for row in 0..n {
        r[(row, q - 1)] = 0.0;
    }
    for k in l..q - 1 {
        let (a0, b0) = (r[(k, k)], r[(k + 1, k)]);
        if b0 == 0.0 {
            continue;
        }
        let h = a0.hypot(b0);
        let (c, s) = (a0 / h, b0 / h);
        for col in k..q - 1 {
            let (x0, x1) = (r[(k, col)], r[(k + 1, col)]);
            r[(k, col)] = c * x0 + s * x1;
            r[(k + 1, col)] = -s * x0 + c * x1;
        }
        r[(k + 1, k)] = 0.0;
        for row in 0..n {
            let (x0, x1) = (j[(row, k)], j[(row, k + 1)]);
            j[(row, k)] = c * x0 + s * x1;
            j[(row, k + 1)] = -s * x0 + c * x1;
        }
    }
}
