use std::fmt::Write as _;

use super::GeometryError;
use crate::numerics::{dot, norm2, Matrix};
use crate::solver::{solve_lp, LpProblem, SolveStatus, DEFAULT_TOL};

/// The set `{x : H·x ≤ h}`.
#[derive(Debug, Clone, PartialEq)]
pub struct Polyhedron {
    a: Matrix,
    b: Vec<f64>,
}

impl Polyhedron {
    pub fn new(a: Matrix, b: Vec<f64>) -> Result<Self, GeometryError> {
        if a.rows() != b.len() {
            return Err(GeometryError::Dimension(format!(
                "{} constraint rows but {} offsets",
                a.rows(),
                b.len()
            )));
        }
        if b.iter().any(|v| !v.is_finite()) {
            return Err(GeometryError::Dimension("offsets must be finite".into()));
        }
        for (i, row) in a.row_iter().enumerate() {
            if row.iter().all(|v| *v == 0.0) && b[i] < 0.0 {
                return Err(GeometryError::Empty);
            }
        }
        Ok(Self { a, b })
    }

    pub fn from_rows(rows: &[Vec<f64>], b: Vec<f64>) -> Result<Self, GeometryError> {
        let a = Matrix::from_rows(rows).map_err(|e| GeometryError::Dimension(e.to_string()))?;
        Self::new(a, b)
    }

    /// The axis-aligned box `lo ≤ x ≤ hi`, rows ordered `+e₀, -e₀, +e₁, …`.
    pub fn from_box(lo: &[f64], hi: &[f64]) -> Result<Self, GeometryError> {
        if lo.len() != hi.len() {
            return Err(GeometryError::Dimension("box bounds differ in length".into()));
        }
        let n = lo.len();
        let mut a = Matrix::zeros(2 * n, n);
        let mut b = Vec::with_capacity(2 * n);
        for i in 0..n {
            a[(2 * i, i)] = 1.0;
            b.push(hi[i]);
            a[(2 * i + 1, i)] = -1.0;
            b.push(-lo[i]);
        }
        Self::new(a, b)
    }

    /// `|x_i| ≤ bound_i`.
    pub fn symmetric_box(bounds: &[f64]) -> Result<Self, GeometryError> {
        let lo: Vec<f64> = bounds.iter().map(|v| -v).collect();
        Self::from_box(&lo, bounds)
    }

    /// A polyhedron with no rows (all of ℝⁿ).
    pub fn universe(dim: usize) -> Self {
        Self {
            a: Matrix::empty(dim),
            b: Vec::new(),
        }
    }

    pub fn dim(&self) -> usize {
        self.a.cols()
    }

    pub fn n_rows(&self) -> usize {
        self.a.rows()
    }

    pub fn a(&self) -> &Matrix {
        &self.a
    }

    pub fn b(&self) -> &[f64] {
        &self.b
    }

    pub fn row(&self, i: usize) -> (&[f64], f64) {
        (self.a.row(i), self.b[i])
    }

    /// `H·x ≤ h + tol` componentwise.
    pub fn contains(&self, x: &[f64], tol: f64) -> bool {
        assert_eq!(x.len(), self.dim(), "point dimension mismatch");
        self.a.row_iter().zip(&self.b).all(|(r, b)| dot(r, x) <= b + tol)
    }

    /// Largest row violation `max_i (H_i·x − h_i)`, `-inf` with no rows.
    pub fn max_violation(&self, x: &[f64]) -> f64 {
        self.a
            .row_iter()
            .zip(&self.b)
            .map(|(r, b)| dot(r, x) - b)
            .fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn intersect(&self, other: &Polyhedron) -> Polyhedron {
        assert_eq!(self.dim(), other.dim(), "intersecting sets of different dimension");
        let mut b = self.b.clone();
        b.extend_from_slice(&other.b);
        Polyhedron {
            a: self.a.vstack(&other.a),
            b,
        }
    }

    /// Rows rescaled to unit Euclidean norm; all-zero rows (necessarily
    /// with `h ≥ 0`) are dropped.
    pub fn normalized(&self) -> Polyhedron {
        let mut a = Matrix::empty(self.dim());
        let mut b = Vec::with_capacity(self.b.len());
        for (r, hb) in self.a.row_iter().zip(&self.b) {
            let nr = norm2(r);
            if nr == 0.0 {
                continue;
            }
            let scaled: Vec<f64> = r.iter().map(|v| v / nr).collect();
            a.push_row(&scaled);
            b.push(hb / nr);
        }
        Polyhedron { a, b }
    }

    /// Every row `(H_i, h_i)` has a partner `(−H_i, h_i)` after normalization.
    pub fn is_zero_symmetric(&self, tol: f64) -> bool {
        let p = self.normalized();
        (0..p.n_rows()).all(|i| {
            let (ri, bi) = p.row(i);
            (0..p.n_rows()).any(|k| {
                let (rk, bk) = p.row(k);
                (bi - bk).abs() <= tol * (1.0 + bi.abs())
                    && ri.iter().zip(rk).all(|(x, y)| (x + y).abs() <= tol)
            })
        })
    }

    /// The image `{-x : x ∈ self}`.
    pub fn negated(&self) -> Polyhedron {
        Polyhedron {
            a: self.a.scaled(-1.0),
            b: self.b.clone(),
        }
    }

    /// `max dirᵀx` over the set; `Ok(None)` when unbounded in that direction.
    /// Solved through the dual `min hᵀy, Hᵀy = dir, y ≥ 0`, whose tableau has
    /// only `dim` rows.
    pub fn support(&self, dir: &[f64]) -> Result<Option<f64>, GeometryError> {
        support_of(&self.a, &self.b, dir, None)
    }

    /// Whether the set has any point.
    pub fn is_empty(&self) -> Result<bool, GeometryError> {
        let n = self.dim();
        let lp = LpProblem::new(vec![0.0; n], self.a.clone(), self.b.clone());
        let out = solve_lp(&lp, DEFAULT_TOL, 0)?;
        match out.status {
            SolveStatus::Optimal => Ok(false),
            SolveStatus::Infeasible => Ok(true),
            s => Err(GeometryError::Solver(format!("feasibility LP ended with {s:?}"))),
        }
    }

    /// Per-axis bounds via `2·dim` support LPs.
    pub fn bounding_box(&self) -> Result<(Vec<f64>, Vec<f64>), GeometryError> {
        let n = self.dim();
        let mut lo = vec![0.0; n];
        let mut hi = vec![0.0; n];
        for i in 0..n {
            let mut e = vec![0.0; n];
            e[i] = 1.0;
            hi[i] = self.support(&e)?.ok_or(GeometryError::Unbounded)?;
            e[i] = -1.0;
            lo[i] = -self.support(&e)?.ok_or(GeometryError::Unbounded)?;
        }
        Ok((lo, hi))
    }

    pub fn is_bounded(&self) -> Result<bool, GeometryError> {
        match self.bounding_box() {
            Ok(_) => Ok(true),
            Err(GeometryError::Unbounded) => Ok(false),
            Err(e) => Err(e),
        }
    }

    /// `self ⊆ other` up to `tol`: every row of `other` bounds `self`.
    pub fn is_subset_of(&self, other: &Polyhedron, tol: f64) -> Result<bool, GeometryError> {
        for (r, b) in other.a.row_iter().zip(&other.b) {
            match self.support(r)? {
                None => return Ok(false),
                Some(v) if v > b + tol * (1.0 + b.abs()) => return Ok(false),
                Some(_) => {}
            }
        }
        Ok(true)
    }

    /// Text form: a header `m n`, then one line per row holding the row of
    /// H followed by h, every value with 17 significant digits.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "{} {}", self.n_rows(), self.dim());
        for (r, b) in self.a.row_iter().zip(&self.b) {
            let mut first = true;
            for v in r.iter().chain(std::iter::once(b)) {
                if !first {
                    s.push(' ');
                }
                first = false;
                let _ = write!(s, "{}", crate::io::fmt_f64(*v));
            }
            s.push('\n');
        }
        s
    }

    pub fn from_text(text: &str) -> Result<Self, GeometryError> {
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        let header = lines.next().ok_or_else(|| GeometryError::Parse("missing header".into()))?;
        let dims: Vec<usize> = header
            .split_whitespace()
            .map(|t| t.parse::<usize>())
            .collect::<Result<_, _>>()
            .map_err(|e| GeometryError::Parse(format!("header: {e}")))?;
        let [m, n] = dims[..] else {
            return Err(GeometryError::Parse(format!("header must be `m n`, got `{header}`")));
        };
        let mut a = Matrix::empty(n);
        let mut b = Vec::with_capacity(m);
        for (k, line) in lines.enumerate() {
            let vals: Vec<f64> = line
                .split_whitespace()
                .map(|t| t.parse::<f64>())
                .collect::<Result<_, _>>()
                .map_err(|e| GeometryError::Parse(format!("row {k}: {e}")))?;
            if vals.len() != n + 1 {
                return Err(GeometryError::Parse(format!(
                    "row {k} has {} values, expected {}",
                    vals.len(),
                    n + 1
                )));
            }
            a.push_row(&vals[..n]);
            b.push(vals[n]);
        }
        if b.len() != m {
            return Err(GeometryError::Parse(format!("header says {m} rows, found {}", b.len())));
        }
        Self::new(a, b)
    }
}

/// Support function over `{x : a·x ≤ b}`, optionally skipping row `skip`.
/// Assumes the set is non-empty.
pub(crate) fn support_of(a: &Matrix, b: &[f64], dir: &[f64], skip: Option<usize>) -> Result<Option<f64>, GeometryError> {
    let n = a.cols();
    let rows: Vec<usize> = (0..a.rows()).filter(|&i| Some(i) != skip).collect();
    if rows.is_empty() {
        return Ok(if dir.iter().all(|v| *v == 0.0) { Some(0.0) } else { None });
    }
    // dual: min bᵀy  s.t.  Aᵀy = dir, y ≥ 0
    let m = rows.len();
    let mut eq = Matrix::zeros(n, m);
    for (k, &i) in rows.iter().enumerate() {
        for j in 0..n {
            eq[(j, k)] = a[(i, j)];
        }
    }
    let cost: Vec<f64> = rows.iter().map(|&i| b[i]).collect();
    let lp = LpProblem::new(cost, Matrix::empty(m), Vec::new())
        .with_eq(eq, dir.to_vec())
        .with_nonnegative(vec![true; m]);
    let out = solve_lp(&lp, DEFAULT_TOL, 0)?;
    match out.status {
        SolveStatus::Optimal => Ok(Some(out.objective)),
        SolveStatus::Infeasible => Ok(None),
        s => Err(GeometryError::Solver(format!("support LP ended with {s:?}"))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit_box() -> Polyhedron {
        Polyhedron::symmetric_box(&[1.0, 1.0]).unwrap()
    }

    #[test]
    fn box_membership() {
        let tol = 1e-9;
        let p = unit_box();
        assert!(p.contains(&[0.0, 0.0], tol));
        assert!(!p.contains(&[1.0 + 2.0 * tol, 0.0], tol));
        assert!(p.contains(&[1.0 + 0.5 * tol, 0.0], tol));
    }

    #[test]
    fn symmetric_membership() {
        let p = unit_box();
        assert!(p.is_zero_symmetric(1e-12));
        for x in [[0.3, -0.9], [1.0, 1.0], [0.0, 0.5]] {
            let neg = [-x[0], -x[1]];
            assert_eq!(p.contains(&x, 1e-9), p.contains(&neg, 1e-9));
        }
        let shifted = Polyhedron::from_box(&[-1.0, -1.0], &[2.0, 1.0]).unwrap();
        assert!(!shifted.is_zero_symmetric(1e-12));
    }

    #[test]
    fn rejects_trivially_empty_row() {
        let r = Polyhedron::from_rows(&[vec![0.0, 0.0]], vec![-1.0]);
        assert!(matches!(r, Err(GeometryError::Empty)));
    }

    #[test]
    fn support_and_bbox() {
        let p = Polyhedron::from_box(&[-1.0, -2.0], &[3.0, 4.0]).unwrap();
        assert_eq!(p.support(&[1.0, 1.0]).unwrap(), Some(7.0));
        let (lo, hi) = p.bounding_box().unwrap();
        assert_eq!(lo, vec![-1.0, -2.0]);
        assert_eq!(hi, vec![3.0, 4.0]);
        let half = Polyhedron::from_rows(&[vec![1.0, 0.0]], vec![1.0]).unwrap();
        assert_eq!(half.support(&[0.0, 1.0]).unwrap(), None);
        assert!(!half.is_bounded().unwrap());
    }

    #[test]
    fn text_round_trip() {
        let p = Polyhedron::from_rows(&[vec![0.1, 1.0 / 3.0], vec![-2.5e-7, 1e10]], vec![0.7, -1.0 / 7.0]).unwrap();
        let back = Polyhedron::from_text(&p.to_text()).unwrap();
        assert_eq!(p, back);
    }

    #[test]
    fn emptiness() {
        let e = Polyhedron::from_rows(&[vec![1.0], vec![-1.0]], vec![0.0, -1.0]).unwrap();
        assert!(e.is_empty().unwrap());
        assert!(!unit_box().is_empty().unwrap());
    }
}
