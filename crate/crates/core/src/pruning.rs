//! Discards samples that are convex combinations of other samples.
//!
//! Such points never constrain a lower bound fitted below the cloud, so
//! removing them leaves the fitting problem unchanged. A cheap simplex
//! heuristic removes the bulk; an LP sweep then leaves exactly the hull
//! vertices.

use std::collections::HashMap;

use thiserror::Error;

use crate::geometry::{GeometryError, Simplex};
use crate::mpc::{dedup_points, MpcError, SampleSet, DEDUP_TOL};
use crate::numerics::{norm2, rank, Matrix};
use crate::par;
use crate::solver::{solve_lp, LpProblem, SolveStatus, SolverError, DEFAULT_TOL};

pub const SIMPLEX_TOL: f64 = 1e-9;
pub const RANK_TOL: f64 = 1e-9;
const LP_CHUNK: usize = 256;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PruneError {
    #[error("sample set must be 0-symmetric before pruning")]
    NotSymmetric,
    #[error("{0}")]
    Samples(#[from] MpcError),
    #[error("{0}")]
    Geometry(#[from] GeometryError),
    #[error("{0}")]
    Solver(#[from] SolverError),
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct PruneReport {
    pub input: usize,
    pub after_simplex: usize,
    pub after_exact: usize,
    pub simplices: usize,
    pub passes: usize,
}

fn key(p: &[f64]) -> Vec<u64> {
    p.iter().map(|v| (v + 0.0).to_bits()).collect()
}

fn is_origin(p: &[f64]) -> bool {
    p.iter().all(|v| v.abs() <= DEDUP_TOL)
}

/// Simplex heuristic. Each pass walks the candidates in order of decreasing
/// norm, greedily groups `n` of them that are linearly independent (so that
/// with the origin they span a simplex), and removes every other live point
/// inside that simplex. Picked vertices leave the candidate list for the
/// rest of the pass; removed points never come back, and `−x` goes with `x`
/// (it lies in the mirrored simplex), so the output stays 0-symmetric.
/// Passes repeat until one removes nothing.
pub fn prune_simplex(s: &SampleSet, rank_tol: f64) -> Result<(SampleSet, usize, usize), PruneError> {
    if !s.is_symmetric() {
        return Err(PruneError::NotSymmetric);
    }
    let n = s.dim();
    let pts = s.points();
    let norms: Vec<f64> = pts.iter().map(|p| norm2(p)).collect();
    let index: HashMap<Vec<u64>, usize> = pts.iter().enumerate().map(|(i, p)| (key(p), i)).collect();
    let mirror: Vec<Option<usize>> = pts
        .iter()
        .map(|p| index.get(&key(&p.iter().map(|v| -v).collect::<Vec<f64>>())).copied())
        .collect();
    let mut alive = vec![true; pts.len()];
    let mut simplices = 0;
    let mut passes = 0;
    loop {
        passes += 1;
        let mut removed = 0;
        let mut cands: Vec<usize> = (0..pts.len()).filter(|&i| alive[i] && !is_origin(&pts[i])).collect();
        cands.sort_by(|&a, &b| norms[b].total_cmp(&norms[a]).then(a.cmp(&b)));
        let mut used = vec![false; pts.len()];
        let mut head = 0;
        loop {
            while head < cands.len() && (used[cands[head]] || !alive[cands[head]]) {
                head += 1;
            }
            let mut picks: Vec<usize> = Vec::with_capacity(n);
            for &c in &cands[head..] {
                if used[c] || !alive[c] {
                    continue;
                }
                picks.push(c);
                let mut cols = Matrix::zeros(n, picks.len());
                for (k, &pi) in picks.iter().enumerate() {
                    for j in 0..n {
                        cols[(j, k)] = pts[pi][j];
                    }
                }
                if rank(&cols, rank_tol) < picks.len() {
                    picks.pop();
                }
                if picks.len() == n {
                    break;
                }
            }
            if picks.len() < n {
                break;
            }
            for &p in &picks {
                used[p] = true;
            }
            let mut verts = vec![vec![0.0; n]];
            verts.extend(picks.iter().map(|&p| pts[p].clone()));
            let simplex = match Simplex::new(verts, rank_tol) {
                Ok(sx) => sx,
                Err(GeometryError::AffinelyDependent) => continue,
                Err(e) => return Err(e.into()),
            };
            simplices += 1;
            let live: Vec<usize> = (0..pts.len())
                .filter(|&i| alive[i] && !picks.contains(&i) && !is_origin(&pts[i]))
                .collect();
            let inside = par::map(&live, |&i| simplex.contains(&pts[i], SIMPLEX_TOL));
            for (&i, hit) in live.iter().zip(inside) {
                if hit && alive[i] {
                    alive[i] = false;
                    removed += 1;
                    if let Some(m) = mirror[i] {
                        if alive[m] && !picks.contains(&m) {
                            alive[m] = false;
                            removed += 1;
                        }
                    }
                }
            }
        }
        if removed == 0 {
            break;
        }
    }
    let keep: Vec<usize> = (0..pts.len()).filter(|&i| alive[i]).collect();
    Ok((s.subset(&keep, true), simplices, passes))
}

/// `x ∈ conv(others)` as an LP feasibility problem in the weights.
fn in_hull_of(points: &[&[f64]], x: &[f64], tol: f64) -> Result<bool, SolverError> {
    let n = x.len();
    let k = points.len();
    if k == 0 {
        return Ok(false);
    }
    let mut eq = Matrix::zeros(n + 1, k);
    for (c, p) in points.iter().enumerate() {
        for j in 0..n {
            eq[(j, c)] = p[j];
        }
        eq[(n, c)] = 1.0;
    }
    let mut rhs = x.to_vec();
    rhs.push(1.0);
    let lp = LpProblem::new(vec![0.0; k], Matrix::empty(k), Vec::new())
        .with_eq(eq, rhs)
        .with_nonnegative(vec![true; k]);
    let out = solve_lp(&lp, tol, 0)?;
    match out.status {
        SolveStatus::Optimal => Ok(true),
        SolveStatus::Infeasible => Ok(false),
        s => Err(SolverError::Dimension(format!("hull membership LP ended with {s:?}"))),
    }
}

/// Whether `x` is a convex combination of `points` (LP feasibility).
pub fn in_convex_hull(points: &[Vec<f64>], x: &[f64], tol: f64) -> Result<bool, SolverError> {
    let refs: Vec<&[f64]> = points.iter().map(|p| p.as_slice()).collect();
    in_hull_of(&refs, x, tol)
}

/// Exact sweep: point `i` is removed iff it is a convex combination of the
/// other surviving points. Points are processed in fixed chunks; every LP in
/// a chunk sees the survivor snapshot taken before the chunk.
pub fn prune_exact(s: &SampleSet, tol: f64) -> Result<SampleSet, PruneError> {
    let deduped = dedup_points(s.points(), DEDUP_TOL);
    let pts = &deduped;
    let mut alive = vec![true; pts.len()];
    let mut start = 0;
    while start < pts.len() {
        let end = (start + LP_CHUNK).min(pts.len());
        let snapshot: Vec<usize> = (0..pts.len()).filter(|&i| alive[i]).collect();
        let chunk: Vec<usize> = (start..end).filter(|&i| alive[i]).collect();
        let verdicts: Vec<Result<bool, SolverError>> = par::map(&chunk, |&i| {
            let others: Vec<&[f64]> = snapshot.iter().filter(|&&j| j != i).map(|&j| pts[j].as_slice()).collect();
            in_hull_of(&others, &pts[i], tol)
        });
        for (&i, v) in chunk.iter().zip(verdicts) {
            if v? {
                alive[i] = false;
            }
        }
        start = end;
    }
    let points: Vec<Vec<f64>> = (0..pts.len()).filter(|&i| alive[i]).map(|i| pts[i].clone()).collect();
    let out = SampleSet::new(s.dim(), points)?;
    Ok(if s.is_symmetric() { out.assume_symmetric()? } else { out })
}

/// Simplex heuristic followed by the exact sweep; the result is partitioned
/// with `zero_tol`.
pub fn prune(s: &SampleSet, zero_tol: f64) -> Result<(SampleSet, PruneReport), PruneError> {
    let (after_simplex, simplices, passes) = prune_simplex(s, RANK_TOL)?;
    let exact = prune_exact(&after_simplex, DEFAULT_TOL)?;
    let report = PruneReport {
        input: s.len(),
        after_simplex: after_simplex.len(),
        after_exact: exact.len(),
        simplices,
        passes,
    };
    Ok((exact.partition(zero_tol)?, report))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sym(points: Vec<Vec<f64>>) -> SampleSet {
        SampleSet::new(points[0].len(), points).unwrap().symmetrize()
    }

    #[test]
    fn square_interior_point_removed() {
        let s = sym(vec![vec![1.0, 1.0], vec![1.0, -1.0], vec![0.0, 0.0], vec![0.3, 0.1]]);
        let (out, _) = prune(&s, 1e-12).unwrap();
        let mut pts = out.points().to_vec();
        pts.sort_by(|a, b| a.partial_cmp(b).unwrap());
        assert_eq!(pts, vec![vec![-1.0, -1.0], vec![-1.0, 1.0], vec![1.0, -1.0], vec![1.0, 1.0]]);
    }

    #[test]
    fn collinear_midpoint_removed() {
        let s = SampleSet::new(2, vec![vec![0.0, 0.0], vec![1.0, 0.5], vec![2.0, 1.0], vec![0.0, 3.0]]).unwrap();
        let out = prune_exact(&s, 1e-9).unwrap();
        assert_eq!(out.points(), &[vec![0.0, 0.0], vec![2.0, 1.0], vec![0.0, 3.0]]);
        assert_eq!(prune_exact(&out, 1e-9).unwrap().points(), out.points());
    }

    #[test]
    fn simplex_heuristic_keeps_hull() {
        let pts: Vec<Vec<f64>> = (0..20)
            .map(|k| {
                let t = k as f64 * std::f64::consts::TAU / 40.0;
                vec![t.cos(), t.sin()]
            })
            .chain(std::iter::once(vec![0.0, 0.0]))
            .collect();
        let s = sym(pts);
        let (out, _, _) = prune_simplex(&s, RANK_TOL).unwrap();
        // every circle point is a hull vertex
        assert_eq!(out.len(), s.len());
    }

    #[test]
    fn requires_symmetric_input() {
        let s = SampleSet::new(2, vec![vec![1.0, 0.0], vec![0.0, 0.0]]).unwrap();
        assert!(matches!(prune_simplex(&s, RANK_TOL), Err(PruneError::NotSymmetric)));
    }
}
