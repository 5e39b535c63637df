//! Independent reference implementations used as test oracles. Nothing here
//! calls into the library's solvers.

#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn uniform(r: &mut ChaCha8Rng, lo: f64, hi: f64) -> f64 {
    r.gen_range(lo..hi)
}

pub struct RandomQp {
    pub h: Vec<Vec<f64>>,
    pub c: Vec<f64>,
    pub a: Vec<Vec<f64>>,
    pub b: Vec<f64>,
}

/// Strictly convex QP with a known feasible point, so it is never infeasible.
pub fn random_qp(seed: u64, n: usize, m: usize) -> RandomQp {
    let mut r = rng(seed);
    let l: Vec<Vec<f64>> = (0..n).map(|_| (0..n).map(|_| uniform(&mut r, -1.0, 1.0)).collect()).collect();
    let mut h = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in 0..n {
            h[i][j] = (0..n).map(|k| l[i][k] * l[j][k]).sum::<f64>() + if i == j { 0.1 } else { 0.0 };
        }
    }
    let c: Vec<f64> = (0..n).map(|_| uniform(&mut r, -5.0, 5.0)).collect();
    let x0: Vec<f64> = (0..n).map(|_| uniform(&mut r, -1.0, 1.0)).collect();
    let a: Vec<Vec<f64>> = (0..m).map(|_| (0..n).map(|_| uniform(&mut r, -1.0, 1.0)).collect()).collect();
    let b: Vec<f64> = a.iter().map(|row| dot(row, &x0) + uniform(&mut r, 0.0, 0.5)).collect();
    RandomQp { h, c, a, b }
}

/// Gaussian elimination with partial pivoting.
pub fn gauss_solve(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Option<Vec<f64>> {
    let n = b.len();
    let scale = a.iter().flatten().fold(0.0f64, |m, v| m.max(v.abs())).max(1.0);
    for col in 0..n {
        let piv = (col..n).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))?;
        if a[piv][col].abs() <= 1e-11 * scale {
            return None;
        }
        a.swap(col, piv);
        b.swap(col, piv);
        for r in col + 1..n {
            let f = a[r][col] / a[col][col];
            for c in col..n {
                a[r][c] -= f * a[col][c];
            }
            b[r] -= f * b[col];
        }
    }
    let mut x = vec![0.0; n];
    for r in (0..n).rev() {
        let s: f64 = (r + 1..n).map(|c| a[r][c] * x[c]).sum();
        x[r] = (b[r] - s) / a[r][r];
    }
    Some(x)
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn subsets(m: usize, max_size: usize) -> Vec<Vec<usize>> {
    let mut out = vec![vec![]];
    for i in 0..m {
        let mut more = Vec::new();
        for s in &out {
            if s.len() < max_size {
                let mut t = s.clone();
                t.push(i);
                more.push(t);
            }
        }
        out.extend(more);
    }
    out
}

/// `min ½xᵀHx + cᵀx s.t. Ax ≤ b` by trying every active set of size ≤ n and
/// keeping the best KKT point. `None` when no KKT point exists.
pub fn qp_enumerate(h: &[Vec<f64>], c: &[f64], a: &[Vec<f64>], b: &[f64]) -> Option<(Vec<f64>, f64)> {
    let n = c.len();
    let mut best: Option<(Vec<f64>, f64)> = None;
    for s in subsets(a.len(), n) {
        let k = s.len();
        let mut kkt = vec![vec![0.0; n + k]; n + k];
        let mut rhs = vec![0.0; n + k];
        for i in 0..n {
            kkt[i][..n].copy_from_slice(&h[i]);
            rhs[i] = -c[i];
        }
        for (r, &row) in s.iter().enumerate() {
            for j in 0..n {
                kkt[j][n + r] = a[row][j];
                kkt[n + r][j] = a[row][j];
            }
            rhs[n + r] = b[row];
        }
        let Some(sol) = gauss_solve(kkt, rhs) else { continue };
        let x = &sol[..n];
        if sol[n..].iter().any(|&l| l < -1e-10) {
            continue;
        }
        if a.iter().zip(b).any(|(ai, bi)| dot(ai, x) > bi + 1e-9 * (1.0 + bi.abs())) {
            continue;
        }
        let hx: Vec<f64> = h.iter().map(|r| dot(r, x)).collect();
        let obj = 0.5 * dot(x, &hx) + dot(c, x);
        if best.as_ref().map_or(true, |(_, o)| obj < *o) {
            best = Some((x.to_vec(), obj));
        }
    }
    best
}

/// Scaled KKT residual of `(x, λ)` for `min ½xᵀHx + cᵀx s.t. Ax ≤ b`.
pub fn kkt_residual(h: &[Vec<f64>], c: &[f64], a: &[Vec<f64>], b: &[f64], x: &[f64], lambda: &[f64]) -> f64 {
    let n = c.len();
    let scale = 1.0
        + h.iter().flatten().fold(0.0f64, |m, v| m.max(v.abs()))
        + c.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let mut stat = vec![0.0; n];
    for i in 0..n {
        stat[i] = dot(&h[i], x) + c[i];
    }
    for (row, l) in a.iter().zip(lambda) {
        for j in 0..n {
            stat[j] += l * row[j];
        }
    }
    let mut r = stat.iter().fold(0.0f64, |m, v| m.max(v.abs())) / scale;
    for ((row, bi), l) in a.iter().zip(b).zip(lambda) {
        let slack = dot(row, x) - bi;
        r = r.max(slack.max(0.0) / (1.0 + bi.abs()));
        r = r.max((-l).max(0.0) / scale);
        r = r.max((l * slack).abs() / (scale * (1.0 + bi.abs())));
    }
    r
}

fn cross(o: [f64; 2], a: [f64; 2], b: [f64; 2]) -> f64 {
    (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])
}

/// Extreme points of a planar set, O(n³): `(p, q)` is a hull edge when every
/// other point is strictly left of it or on the closed segment. Returned
/// sorted lexicographically.
pub fn brute_hull(points: &[[f64; 2]]) -> Vec<[f64; 2]> {
    let mut pts = points.to_vec();
    pts.sort_by(|a, b| a.partial_cmp(b).unwrap());
    pts.dedup();
    let eps = 1e-12;
    let mut keep = vec![false; pts.len()];
    for i in 0..pts.len() {
        for j in 0..pts.len() {
            if i == j {
                continue;
            }
            let (p, q) = (pts[i], pts[j]);
            let ok = pts.iter().enumerate().all(|(k, &r)| {
                if k == i || k == j {
                    return true;
                }
                let c = cross(p, q, r);
                if c > eps {
                    return true;
                }
                if c < -eps {
                    return false;
                }
                let t = ((r[0] - p[0]) * (q[0] - p[0]) + (r[1] - p[1]) * (q[1] - p[1]))
                    / ((q[0] - p[0]).powi(2) + (q[1] - p[1]).powi(2));
                (0.0..=1.0).contains(&t)
            });
            if ok {
                keep[i] = true;
                keep[j] = true;
            }
        }
    }
    pts.into_iter().zip(keep).filter(|(_, k)| *k).map(|(p, _)| p).collect()
}

/// Vertices of `{x : Hx ≤ h}` in the plane: all pairwise line intersections
/// that satisfy every row, ordered by angle around their centroid.
pub fn polygon_vertices_from_h(rows: &[Vec<f64>], rhs: &[f64]) -> Vec<[f64; 2]> {
    let mut verts: Vec<[f64; 2]> = Vec::new();
    for i in 0..rows.len() {
        for j in i + 1..rows.len() {
            let det = rows[i][0] * rows[j][1] - rows[i][1] * rows[j][0];
            if det.abs() < 1e-12 {
                continue;
            }
            let x = (rhs[i] * rows[j][1] - rows[i][1] * rhs[j]) / det;
            let y = (rows[i][0] * rhs[j] - rhs[i] * rows[j][0]) / det;
            if rows.iter().zip(rhs).all(|(r, b)| r[0] * x + r[1] * y <= b + 1e-9) {
                verts.push([x, y]);
            }
        }
    }
    let n = verts.len() as f64;
    let cx = verts.iter().map(|v| v[0]).sum::<f64>() / n;
    let cy = verts.iter().map(|v| v[1]).sum::<f64>() / n;
    verts.sort_by(|a, b| (a[1] - cy).atan2(a[0] - cx).total_cmp(&(b[1] - cy).atan2(b[0] - cx)));
    verts
}

/// Shoelace area of `{x : Hx ≤ h}` in the plane.
pub fn polygon_area_from_h(rows: &[Vec<f64>], rhs: &[f64]) -> f64 {
    let verts = polygon_vertices_from_h(rows, rhs);
    let mut area = 0.0;
    for k in 0..verts.len() {
        let (p, q) = (verts[k], verts[(k + 1) % verts.len()]);
        area += p[0] * q[1] - q[0] * p[1];
    }
    area.abs() / 2.0
}

/// Global optimum of the max-affine lower-bound fit on planar points
/// `(x, y)` with every point in the objective and constraints: minimum over
/// all `m^n` assignments of the per-piece constrained least squares.
pub fn fit_bruteforce(points: &[[f64; 2]], m: usize) -> f64 {
    let n = points.len();
    let a: Vec<Vec<f64>> = points.iter().map(|p| vec![p[0], 1.0]).collect();
    let b: Vec<f64> = points.iter().map(|p| p[1]).collect();
    let ridge = 1e-11;
    // cost of fitting the subset `mask` with one piece
    let mut piece_cost = std::collections::HashMap::new();
    let mut cost = |mask: u32| -> f64 {
        *piece_cost.entry(mask).or_insert_with(|| {
            if mask == 0 {
                return 0.0;
            }
            let mut h = vec![vec![0.0; 2]; 2];
            let mut c = vec![0.0; 2];
            for i in (0..n).filter(|i| mask & (1 << i) != 0) {
                for r in 0..2 {
                    c[r] -= 2.0 * b[i] * a[i][r];
                    for s in 0..2 {
                        h[r][s] += 2.0 * a[i][r] * a[i][s];
                    }
                }
            }
            h[0][0] += ridge;
            h[1][1] += ridge;
            let (x, _) = qp_enumerate(&h, &c, &a, &b).expect("a low constant piece is always feasible");
            (0..n)
                .filter(|i| mask & (1 << i) != 0)
                .map(|i| (dot(&a[i], &x) - b[i]).powi(2))
                .sum()
        })
    };
    let total = (m as u64).pow(n as u32);
    let mut best = f64::INFINITY;
    for code in 0..total {
        let mut masks = vec![0u32; m];
        let mut c = code;
        for i in 0..n {
            masks[(c % m as u64) as usize] |= 1 << i;
            c /= m as u64;
        }
        best = best.min(masks.iter().map(|&mk| cost(mk)).sum());
    }
    best
}
