use super::polyhedron::support_of;
use super::{GeometryError, Polyhedron};
use crate::numerics::{Lu, Matrix};
use crate::par;

pub const MAX_VERTEX_DIM: usize = 6;
pub const DEFAULT_ROW_CAP: usize = 100_000;

/// All `k`-subsets of `0..m` in lexicographic order.
fn combinations(m: usize, k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    if k > m {
        return out;
    }
    let mut idx: Vec<usize> = (0..k).collect();
    loop {
        out.push(idx.clone());
        let mut i = k;
        while i > 0 {
            i -= 1;
            if idx[i] != i + m - k {
                idx[i] += 1;
                for j in i + 1..k {
                    idx[j] = idx[j - 1] + 1;
                }
                break;
            }
            if i == 0 {
                return out;
            }
        }
        if k == 0 {
            return out;
        }
    }
}

/// Vertex enumeration by brute force over all `dim`-row subsets: solve the
/// square system, keep solutions satisfying every row within `tol`.
/// Rows are normalized first so `tol` is a distance. The result is
/// duplicate-free and sorted lexicographically.
pub fn vertices(p: &Polyhedron, tol: f64) -> Result<Vec<Vec<f64>>, GeometryError> {
    let n = p.dim();
    if n > MAX_VERTEX_DIM {
        return Err(GeometryError::DimensionTooLarge { dim: n, max: MAX_VERTEX_DIM });
    }
    if !p.is_bounded()? {
        return Err(GeometryError::Unbounded);
    }
    let q = p.normalized();
    let subsets = combinations(q.n_rows(), n);
    let found: Vec<Option<Vec<f64>>> = par::map(&subsets, |rows| {
        let sub = q.a().select_rows(rows);
        let rhs: Vec<f64> = rows.iter().map(|&i| q.b()[i]).collect();
        let lu = Lu::new(&sub, 1e-10)?;
        let x = lu.solve(&rhs);
        if q.contains(&x, tol) {
            Some(x)
        } else {
            None
        }
    });
    let mut verts: Vec<Vec<f64>> = Vec::new();
    let merge = tol.max(1e-9) * 10.0;
    for x in found.into_iter().flatten() {
        if !verts
            .iter()
            .any(|v| v.iter().zip(&x).all(|(a, b)| (a - b).abs() <= merge))
        {
            verts.push(x);
        }
    }
    verts.sort_by(|a, b| {
        a.iter()
            .zip(b)
            .map(|(x, y)| x.total_cmp(y))
            .find(|o| o.is_ne())
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    Ok(verts)
}

/// Drops rows implied by the others. Row `i` is kept iff maximizing `H_i·x`
/// over the remaining rows exceeds `h_i + tol`. Rows are tested in order
/// against the rows still kept, so of two identical rows the later one
/// survives. Output rows are normalized to unit length.
pub fn remove_redundant(p: &Polyhedron, tol: f64) -> Result<Polyhedron, GeometryError> {
    let n = p.dim();
    for (r, b) in p.a().row_iter().zip(p.b()) {
        if r.iter().all(|v| *v == 0.0) && *b < -tol {
            return Err(GeometryError::Empty);
        }
    }
    let q = p.normalized();
    if q.n_rows() == 0 {
        return Ok(q);
    }
    if q.is_empty()? {
        return Err(GeometryError::Empty);
    }
    // cheap pass: among rows with the same normal only the tightest matters
    let mut keep: Vec<bool> = vec![true; q.n_rows()];
    for i in 0..q.n_rows() {
        if !keep[i] {
            continue;
        }
        for k in i + 1..q.n_rows() {
            if keep[k] && q.a().row(i).iter().zip(q.a().row(k)).all(|(x, y)| (x - y).abs() <= 1e-12) {
                if q.b()[k] <= q.b()[i] {
                    keep[i] = false;
                    break;
                }
                keep[k] = false;
            }
        }
    }
    let mut a = Matrix::empty(n);
    let mut b = Vec::new();
    for i in (0..q.n_rows()).filter(|&i| keep[i]) {
        a.push_row(q.a().row(i));
        b.push(q.b()[i]);
    }
    let mut i = 0;
    while i < b.len() {
        let dir = a.row(i).to_vec();
        let redundant = match support_of(&a, &b, &dir, Some(i))? {
            Some(v) => v <= b[i] + tol,
            None => false,
        };
        if redundant {
            let rows: Vec<usize> = (0..b.len()).filter(|&k| k != i).collect();
            a = a.select_rows(&rows);
            b.remove(i);
        } else {
            i += 1;
        }
    }
    Polyhedron::new(a, b)
}

/// Exact projection onto the coordinates `keep` (in the given order) by
/// Fourier–Motzkin elimination, minimizing rows after every elimination.
pub fn project(p: &Polyhedron, keep: &[usize]) -> Result<Polyhedron, GeometryError> {
    project_with_cap(p, keep, DEFAULT_ROW_CAP, 1e-9)
}

pub fn project_with_cap(p: &Polyhedron, keep: &[usize], cap: usize, tol: f64) -> Result<Polyhedron, GeometryError> {
    let n = p.dim();
    if keep.iter().any(|&k| k >= n) {
        return Err(GeometryError::Dimension(format!("keep index out of range for dimension {n}")));
    }
    let mut alive: Vec<usize> = (0..n).collect();
    let mut cur = remove_redundant(p, tol)?;
    let mut rows: Vec<Vec<f64>> = cur.a().row_iter().map(|r| r.to_vec()).collect();
    let mut rhs: Vec<f64> = cur.b().to_vec();

    loop {
        let to_drop: Vec<usize> = alive.iter().copied().filter(|c| !keep.contains(c)).collect();
        if to_drop.is_empty() {
            break;
        }
        // eliminate the coordinate producing the fewest new rows
        let pick = to_drop
            .iter()
            .copied()
            .min_by_key(|&c| {
                let pos = rows.iter().filter(|r| r[c] > 0.0).count();
                let neg = rows.iter().filter(|r| r[c] < 0.0).count();
                (pos * neg, c)
            })
            .expect("non-empty");
        let mut next_rows = Vec::new();
        let mut next_rhs = Vec::new();
        let (mut pos, mut neg) = (Vec::new(), Vec::new());
        for (i, r) in rows.iter().enumerate() {
            if r[pick] > 1e-14 {
                pos.push(i);
            } else if r[pick] < -1e-14 {
                neg.push(i);
            } else {
                let mut r2 = r.clone();
                r2[pick] = 0.0;
                next_rows.push(r2);
                next_rhs.push(rhs[i]);
            }
        }
        if next_rows.len() + pos.len() * neg.len() > cap {
            return Err(GeometryError::RowBlowup {
                rows: next_rows.len() + pos.len() * neg.len(),
                cap,
            });
        }
        for &ip in &pos {
            for &in_ in &neg {
                let (ap, an) = (rows[ip][pick], -rows[in_][pick]);
                let mut r: Vec<f64> = rows[ip]
                    .iter()
                    .zip(&rows[in_])
                    .map(|(x, y)| x / ap + y / an)
                    .collect();
                r[pick] = 0.0;
                next_rows.push(r);
                next_rhs.push(rhs[ip] / ap + rhs[in_] / an);
            }
        }
        alive.retain(|&c| c != pick);
        let mut a = Matrix::empty(n);
        for r in &next_rows {
            a.push_row(r);
        }
        cur = remove_redundant(&Polyhedron::new(a, next_rhs)?, tol)?;
        rows = cur.a().row_iter().map(|r| r.to_vec()).collect();
        rhs = cur.b().to_vec();
    }
    let mut a = Matrix::empty(keep.len());
    for r in &rows {
        let sel: Vec<f64> = keep.iter().map(|&k| r[k]).collect();
        a.push_row(&sel);
    }
    remove_redundant(&Polyhedron::new(a, rhs)?, tol)
}

/// Counter-clockwise convex hull of planar points (Andrew's monotone chain).
/// Collinear boundary points are dropped; the first vertex is the
/// lexicographically smallest.
pub fn hull_2d(points: &[[f64; 2]]) -> Result<Vec<[f64; 2]>, GeometryError> {
    let mut pts: Vec<[f64; 2]> = points.to_vec();
    pts.sort_by(|a, b| a[0].total_cmp(&b[0]).then(a[1].total_cmp(&b[1])));
    pts.dedup();
    if pts.len() < 3 {
        return Err(GeometryError::Degenerate);
    }
    let cross = |o: &[f64; 2], a: &[f64; 2], b: &[f64; 2]| (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0]);
    let mut hull: Vec<[f64; 2]> = Vec::with_capacity(2 * pts.len());
    for p in &pts {
        while hull.len() >= 2 && cross(&hull[hull.len() - 2], &hull[hull.len() - 1], p) <= 0.0 {
            hull.pop();
        }
        hull.push(*p);
    }
    let lower_len = hull.len() + 1;
    for p in pts.iter().rev().skip(1) {
        while hull.len() >= lower_len && cross(&hull[hull.len() - 2], &hull[hull.len() - 1], p) <= 0.0 {
            hull.pop();
        }
        hull.push(*p);
    }
    hull.pop();
    if hull.len() < 3 {
        return Err(GeometryError::Degenerate);
    }
    Ok(hull)
}

/// Shoelace area of a simple polygon given in order.
pub fn polygon_area(vertices: &[[f64; 2]]) -> f64 {
    let n = vertices.len();
    let twice: f64 = (0..n)
        .map(|i| {
            let (a, b) = (vertices[i], vertices[(i + 1) % n]);
            a[0] * b[1] - b[0] * a[1]
        })
        .sum();
    0.5 * twice.abs()
}

/// Area of a bounded 2-D polyhedron.
pub fn area_2d(p: &Polyhedron) -> Result<f64, GeometryError> {
    if p.dim() != 2 {
        return Err(GeometryError::Dimension(format!("area_2d needs a planar set, got dimension {}", p.dim())));
    }
    let v: Vec<[f64; 2]> = vertices(p, 1e-9)?.into_iter().map(|v| [v[0], v[1]]).collect();
    match hull_2d(&v) {
        Ok(h) => Ok(polygon_area(&h)),
        Err(GeometryError::Degenerate) => Ok(0.0),
        Err(e) => Err(e),
    }
}

/// `n+1` affinely independent points in `n` dimensions.
#[derive(Debug, Clone)]
pub struct Simplex {
    vertices: Vec<Vec<f64>>,
    lu: Lu,
}

impl Simplex {
    pub fn new(vertices: Vec<Vec<f64>>, rank_tol: f64) -> Result<Self, GeometryError> {
        let n = vertices.first().map_or(0, |v| v.len());
        if vertices.len() != n + 1 || vertices.iter().any(|v| v.len() != n) {
            return Err(GeometryError::Dimension(format!(
                "a simplex in dimension {n} needs {} vertices",
                n + 1
            )));
        }
        let mut diffs = Matrix::zeros(n, n);
        for k in 0..n {
            for j in 0..n {
                diffs[(j, k)] = vertices[k + 1][j] - vertices[0][j];
            }
        }
        if crate::numerics::rank(&diffs, rank_tol) < n {
            return Err(GeometryError::AffinelyDependent);
        }
        // columns [v_k; 1]
        let mut m = Matrix::zeros(n + 1, n + 1);
        for (k, v) in vertices.iter().enumerate() {
            for j in 0..n {
                m[(j, k)] = v[j];
            }
            m[(n, k)] = 1.0;
        }
        let lu = Lu::new(&m, 1e-14).ok_or(GeometryError::AffinelyDependent)?;
        Ok(Self { vertices, lu })
    }

    pub fn vertices(&self) -> &[Vec<f64>] {
        &self.vertices
    }

    /// λ with `Σλ = 1` and `Σ λ_k v_k = x`.
    pub fn barycentric(&self, x: &[f64]) -> Vec<f64> {
        let mut rhs = x.to_vec();
        rhs.push(1.0);
        self.lu.solve(&rhs)
    }

    pub fn contains(&self, x: &[f64], tol: f64) -> bool {
        self.barycentric(x).iter().all(|l| *l >= -tol)
    }
}
