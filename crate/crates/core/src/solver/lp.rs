use super::{default_max_iter, SolveOutcome, SolveStatus, SolverError};
use crate::numerics::{dot, Matrix};

/// `min cᵀx  s.t.  A·x ≤ b,  E·x = f`, with `x_j ≥ 0` where `nonnegative[j]`
/// and `x_j` free otherwise. An empty `nonnegative` means all free.
#[derive(Debug, Clone)]
pub struct LpProblem {
    pub cost: Vec<f64>,
    pub ineq_a: Matrix,
    pub ineq_b: Vec<f64>,
    pub eq_a: Matrix,
    pub eq_b: Vec<f64>,
    pub nonnegative: Vec<bool>,
}

impl LpProblem {
    pub fn new(cost: Vec<f64>, ineq_a: Matrix, ineq_b: Vec<f64>) -> Self {
        let n = cost.len();
        Self {
            cost,
            ineq_a,
            ineq_b,
            eq_a: Matrix::empty(n),
            eq_b: Vec::new(),
            nonnegative: Vec::new(),
        }
    }

    pub fn with_eq(mut self, eq_a: Matrix, eq_b: Vec<f64>) -> Self {
        self.eq_a = eq_a;
        self.eq_b = eq_b;
        self
    }

    pub fn with_nonnegative(mut self, nonneg: Vec<bool>) -> Self {
        self.nonnegative = nonneg;
        self
    }

    fn check(&self) -> Result<(), SolverError> {
        let n = self.cost.len();
        let ok = self.ineq_a.cols() == n
            && self.ineq_a.rows() == self.ineq_b.len()
            && self.eq_a.cols() == n
            && self.eq_a.rows() == self.eq_b.len()
            && (self.nonnegative.is_empty() || self.nonnegative.len() == n);
        if ok {
            Ok(())
        } else {
            Err(SolverError::Dimension(format!(
                "{n} variables; inequality {}x{} / {}; equality {}x{} / {}; sign flags {}",
                self.ineq_a.rows(),
                self.ineq_a.cols(),
                self.ineq_b.len(),
                self.eq_a.rows(),
                self.eq_a.cols(),
                self.eq_b.len(),
                self.nonnegative.len()
            )))
        }
    }

    fn is_nonneg(&self, j: usize) -> bool {
        self.nonnegative.get(j).copied().unwrap_or(false)
    }
}

const PIVOT_TOL: f64 = 1e-10;

struct Tableau {
    /// `rows × (cols + 1)`, last column is the right-hand side.
    t: Vec<Vec<f64>>,
    /// reduced-cost row, same width; last entry is −objective
    obj: Vec<f64>,
    basis: Vec<usize>,
    cols: usize,
}

impl Tableau {
    fn pivot(&mut self, r: usize, c: usize) {
        let w = self.cols + 1;
        let pv = self.t[r][c];
        for v in self.t[r].iter_mut() {
            *v /= pv;
        }
        let prow = self.t[r].clone();
        for (i, row) in self.t.iter_mut().enumerate() {
            if i == r {
                continue;
            }
            let f = row[c];
            if f != 0.0 {
                for k in 0..w {
                    row[k] -= f * prow[k];
                }
                row[c] = 0.0;
            }
        }
        let f = self.obj[c];
        if f != 0.0 {
            for k in 0..w {
                self.obj[k] -= f * prow[k];
            }
            self.obj[c] = 0.0;
        }
        self.basis[r] = c;
    }

    /// Runs primal simplex on the current objective row. Columns with
    /// `allowed[j] == false` never enter. Dantzig pricing, switching to
    /// Bland's rule after a run of degenerate pivots.
    fn optimize(&mut self, allowed: &[bool], rc_tol: f64, iters: &mut usize, max_iter: usize) -> Result<(), SolveStatus> {
        let mut degenerate_run = 0usize;
        loop {
            if *iters >= max_iter {
                return Err(SolveStatus::IterLimit);
            }
            let bland = degenerate_run > 50;
            let mut enter = None;
            let mut best = -rc_tol;
            for j in 0..self.cols {
                if !allowed[j] {
                    continue;
                }
                let rc = self.obj[j];
                if rc < -rc_tol {
                    if bland {
                        enter = Some(j);
                        break;
                    }
                    if rc < best {
                        best = rc;
                        enter = Some(j);
                    }
                }
            }
            let Some(c) = enter else { return Ok(()) };

            let rhs = self.cols;
            let mut leave: Option<(usize, f64)> = None;
            for (i, row) in self.t.iter().enumerate() {
                let a = row[c];
                if a > PIVOT_TOL {
                    let ratio = row[rhs].max(0.0) / a;
                    leave = match leave {
                        None => Some((i, ratio)),
                        Some((li, lr)) => {
                            let tie = (ratio - lr).abs() <= 1e-12 * (1.0 + lr.abs());
                            if ratio < lr && !tie {
                                Some((i, ratio))
                            } else if tie && self.basis[i] < self.basis[li] {
                                Some((i, lr.min(ratio)))
                            } else {
                                Some((li, lr))
                            }
                        }
                    };
                }
            }
            let Some((r, ratio)) = leave else {
                return Err(SolveStatus::Unbounded);
            };
            if ratio <= 1e-14 {
                degenerate_run += 1;
            } else {
                degenerate_run = 0;
            }
            self.pivot(r, c);
            *iters += 1;
        }
    }
}

/// Two-phase dense simplex.
pub fn solve_lp(p: &LpProblem, tol: f64, max_iter: usize) -> Result<SolveOutcome, SolverError> {
    if !(tol > 0.0) {
        return Err(SolverError::Tolerance);
    }
    p.check()?;
    let n = p.cost.len();
    let m1 = p.ineq_a.rows();
    let m2 = p.eq_a.rows();
    let m = m1 + m2;
    let max_iter = if max_iter == 0 { default_max_iter(n, m) } else { max_iter };

    // structural columns: x_j⁺ (and x_j⁻ for free variables)
    let mut pos_col = vec![0usize; n];
    let mut neg_col: Vec<Option<usize>> = vec![None; n];
    let mut cols = 0;
    for j in 0..n {
        pos_col[j] = cols;
        cols += 1;
        if !p.is_nonneg(j) {
            neg_col[j] = Some(cols);
            cols += 1;
        }
    }
    let n_struct = cols;
    let slack0 = cols;
    cols += m1;
    let art0 = cols;
    // one artificial per row that lacks a +1 slack in basis
    let mut needs_art = Vec::with_capacity(m);
    for i in 0..m1 {
        needs_art.push(p.ineq_b[i] < 0.0);
    }
    for _ in 0..m2 {
        needs_art.push(true);
    }
    let n_art = needs_art.iter().filter(|v| **v).count();
    cols += n_art;

    let mut t = vec![vec![0.0; cols + 1]; m];
    let mut basis = vec![0usize; m];
    let mut art = art0;
    for i in 0..m {
        let (row, rhs, slack) = if i < m1 {
            (p.ineq_a.row(i), p.ineq_b[i], Some(slack0 + i))
        } else {
            (p.eq_a.row(i - m1), p.eq_b[i - m1], None)
        };
        let sign = if rhs < 0.0 { -1.0 } else { 1.0 };
        for j in 0..n {
            t[i][pos_col[j]] = sign * row[j];
            if let Some(nc) = neg_col[j] {
                t[i][nc] = -sign * row[j];
            }
        }
        if let Some(s) = slack {
            t[i][s] = sign;
        }
        t[i][cols] = sign * rhs;
        if needs_art[i] {
            t[i][art] = 1.0;
            basis[i] = art;
            art += 1;
        } else {
            basis[i] = slack.expect("rows without artificials are inequalities");
        }
    }

    let mut tab = Tableau {
        t,
        obj: vec![0.0; cols + 1],
        basis,
        cols,
    };
    let mut iters = 0usize;
    let b_scale = p
        .ineq_b
        .iter()
        .chain(&p.eq_b)
        .fold(1.0f64, |s, v| s.max(v.abs()));

    if n_art > 0 {
        // phase one: minimize the sum of artificials
        for i in 0..m {
            if tab.basis[i] >= art0 {
                for k in 0..=cols {
                    tab.obj[k] -= tab.t[i][k];
                }
            }
        }
        for k in art0..cols {
            tab.obj[k] = 0.0;
        }
        let allowed = vec![true; cols];
        if let Err(status) = tab.optimize(&allowed, 1e-12, &mut iters, max_iter) {
            let status = if status == SolveStatus::Unbounded {
                SolveStatus::Infeasible
            } else {
                status
            };
            return Ok(SolveOutcome::failed(status, n, m1, iters));
        }
        let infeas = -tab.obj[cols];
        if infeas > tol * 1e-2 * b_scale {
            return Ok(SolveOutcome::failed(SolveStatus::Infeasible, n, m1, iters));
        }
        // drive zero-level artificials out of the basis; drop redundant rows
        let mut i = 0;
        while i < tab.t.len() {
            if tab.basis[i] >= art0 {
                let pivot_col = (0..art0)
                    .filter(|&j| tab.t[i][j].abs() > 1e-9)
                    .max_by(|&a, &b| tab.t[i][a].abs().total_cmp(&tab.t[i][b].abs()).then(b.cmp(&a)));
                match pivot_col {
                    Some(c) => {
                        tab.pivot(i, c);
                        i += 1;
                    }
                    None => {
                        tab.t.remove(i);
                        tab.basis.remove(i);
                    }
                }
            } else {
                i += 1;
            }
        }
    }

    // phase two
    let mut cost_cols = vec![0.0; cols];
    for j in 0..n {
        cost_cols[pos_col[j]] = p.cost[j];
        if let Some(nc) = neg_col[j] {
            cost_cols[nc] = -p.cost[j];
        }
    }
    tab.obj = vec![0.0; cols + 1];
    tab.obj[..cols].copy_from_slice(&cost_cols);
    for i in 0..tab.t.len() {
        let cb = cost_cols[tab.basis[i]];
        if cb != 0.0 {
            for k in 0..=cols {
                tab.obj[k] -= cb * tab.t[i][k];
            }
        }
    }
    let allowed: Vec<bool> = (0..cols).map(|j| j < art0).collect();
    let c_scale = p.cost.iter().fold(1.0f64, |s, v| s.max(v.abs()));
    if let Err(status) = tab.optimize(&allowed, 1e-11 * c_scale, &mut iters, max_iter) {
        return Ok(SolveOutcome::failed(status, n, m1, iters));
    }

    let mut z = vec![0.0; cols];
    for (i, &bcol) in tab.basis.iter().enumerate() {
        z[bcol] = tab.t[i][cols];
    }
    let x: Vec<f64> = (0..n)
        .map(|j| z[pos_col[j]] - neg_col[j].map_or(0.0, |c| z[c]))
        .collect();
    // inequality multipliers are the reduced costs of the slacks
    let multipliers: Vec<f64> = (0..m1)
        .map(|i| {
            let sign = if p.ineq_b[i] < 0.0 { -1.0 } else { 1.0 };
            sign * tab.obj[slack0 + i]
        })
        .collect();
    let objective = dot(&p.cost, &x);

    let mut residual: f64 = 0.0;
    for (i, row) in p.ineq_a.row_iter().enumerate() {
        let v = dot(row, &x) - p.ineq_b[i];
        residual = residual.max(v.max(0.0) / 1.0f64.max(p.ineq_b[i].abs()));
    }
    for (i, row) in p.eq_a.row_iter().enumerate() {
        let v = dot(row, &x) - p.eq_b[i];
        residual = residual.max(v.abs() / 1.0f64.max(p.eq_b[i].abs()));
    }
    for j in 0..n {
        if p.is_nonneg(j) {
            residual = residual.max((-x[j]).max(0.0));
        }
    }
    for j in 0..n_struct {
        residual = residual.max((-tab.obj[j]).max(0.0) / c_scale);
    }
    let status = if residual <= tol {
        SolveStatus::Optimal
    } else {
        SolveStatus::IterLimit
    };
    Ok(SolveOutcome {
        status,
        point: x,
        objective,
        kkt_residual: residual,
        iterations: iters,
        multipliers,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::solver::DEFAULT_TOL;

    #[test]
    fn lower_bound() {
        // min x s.t. x ≥ 2
        let p = LpProblem::new(vec![1.0], Matrix::from_rows(&[[-1.0]]).unwrap(), vec![-2.0]);
        let out = solve_lp(&p, DEFAULT_TOL, 0).unwrap();
        assert_eq!(out.status, SolveStatus::Optimal);
        assert!((out.point[0] - 2.0).abs() < 1e-12);
        assert!((out.objective - 2.0).abs() < 1e-12);
    }

    #[test]
    fn unbounded() {
        let p = LpProblem::new(vec![-1.0], Matrix::from_rows(&[[-1.0]]).unwrap(), vec![0.0]);
        assert_eq!(solve_lp(&p, DEFAULT_TOL, 0).unwrap().status, SolveStatus::Unbounded);
    }

    #[test]
    fn infeasible() {
        let p = LpProblem::new(vec![0.0], Matrix::from_rows(&[[1.0], [-1.0]]).unwrap(), vec![0.0, -1.0]);
        assert_eq!(solve_lp(&p, DEFAULT_TOL, 0).unwrap().status, SolveStatus::Infeasible);
    }

    #[test]
    fn simplex_vertex_optimum() {
        let c = vec![3.0, -1.5, 2.0, 0.5];
        let p = LpProblem::new(c.clone(), Matrix::empty(4), vec![])
            .with_eq(Matrix::from_rows(&[[1.0; 4]]).unwrap(), vec![1.0])
            .with_nonnegative(vec![true; 4]);
        let out = solve_lp(&p, DEFAULT_TOL, 0).unwrap();
        assert!(out.is_optimal());
        assert!((out.objective + 1.5).abs() < 1e-12);
    }

    #[test]
    fn free_variables_and_redundant_equalities() {
        // min x + y, x + y = 1 (twice), x - y ≤ 3, -x ≤ 0
        let p = LpProblem::new(
            vec![1.0, 2.0],
            Matrix::from_rows(&[[1.0, -1.0], [-1.0, 0.0]]).unwrap(),
            vec![3.0, 0.0],
        )
        .with_eq(Matrix::from_rows(&[[1.0, 1.0], [2.0, 2.0]]).unwrap(), vec![1.0, 2.0]);
        let out = solve_lp(&p, DEFAULT_TOL, 0).unwrap();
        assert!(out.is_optimal());
        // y = 1 - x, cost = 2 - x, x - (1 - x) ≤ 3 → x ≤ 2
        assert!((out.point[0] - 2.0).abs() < 1e-10, "{:?}", out.point);
        assert!((out.objective - 0.0).abs() < 1e-10);
    }
}
