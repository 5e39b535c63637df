use std::fmt::Write as _;

use super::{CondensedQp, MpcError, MpcProblem, DEDUP_TOL};
use crate::io::fmt_f64;
use crate::numerics::{norm_inf, uniform_in_box, Rng};
use crate::par;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TrajectoryStatus {
    Converged,
    Infeasible,
    NotConverged,
}

#[derive(Debug, Clone)]
pub struct TrajectoryOutcome {
    pub status: TrajectoryStatus,
    /// Visited states, starting with `x₀`. For a converged run the last
    /// entry is the first state inside the convergence deadband.
    pub states: Vec<Vec<f64>>,
}

/// Closed-loop simulation from `x0` until `‖x‖∞ ≤ conv_tol`.
pub fn simulate(mpc: &MpcProblem, qp: &CondensedQp, x0: &[f64], conv_tol: f64, max_steps: usize) -> Result<TrajectoryOutcome, MpcError> {
    if !(conv_tol > 0.0) {
        return Err(MpcError::Invalid("convergence tolerance must be positive".into()));
    }
    let mut states = vec![x0.to_vec()];
    let mut x = x0.to_vec();
    for _ in 0..max_steps {
        if norm_inf(&x) <= conv_tol {
            return Ok(TrajectoryOutcome {
                status: TrajectoryStatus::Converged,
                states,
            });
        }
        match qp.step(&mpc.system, &x) {
            Ok(s) => x = s.next,
            Err(MpcError::Infeasible) => {
                return Ok(TrajectoryOutcome {
                    status: TrajectoryStatus::Infeasible,
                    states,
                })
            }
            Err(e) => return Err(e),
        }
        states.push(x.clone());
    }
    let status = if norm_inf(&x) <= conv_tol {
        TrajectoryStatus::Converged
    } else {
        TrajectoryStatus::NotConverged
    };
    Ok(TrajectoryOutcome { status, states })
}

/// Index sets by the sign of the last coordinate.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Partition {
    pub zero: Vec<usize>,
    pub neg: Vec<usize>,
    pub pos: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SampleSet {
    dim: usize,
    points: Vec<Vec<f64>>,
    symmetric: bool,
    partition: Option<Partition>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct CollectReport {
    pub starts: usize,
    pub converged: usize,
    pub infeasible: usize,
    pub not_converged: usize,
    pub rejected_draws: usize,
    pub pooled_states: usize,
}

impl SampleSet {
    pub fn new(dim: usize, points: Vec<Vec<f64>>) -> Result<Self, MpcError> {
        if points.iter().any(|p| p.len() != dim || p.iter().any(|v| !v.is_finite())) {
            return Err(MpcError::Invalid(format!("every sample must have {dim} finite coordinates")));
        }
        Ok(Self {
            dim,
            points,
            symmetric: false,
            partition: None,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn points(&self) -> &[Vec<f64>] {
        &self.points
    }

    pub fn is_symmetric(&self) -> bool {
        self.symmetric
    }

    pub fn partition_sets(&self) -> Option<&Partition> {
        self.partition.as_ref()
    }

    /// Marks the set symmetric after verifying that `−x` is present for
    /// every `x` (within the dedup tolerance).
    pub fn assume_symmetric(mut self) -> Result<Self, MpcError> {
        let neg: Vec<Vec<f64>> = self.points.iter().map(|p| p.iter().map(|v| -v).collect()).collect();
        let mut all = self.points.clone();
        all.extend(neg);
        if dedup_points(&all, DEDUP_TOL).len() != dedup_points(&self.points, DEDUP_TOL).len() {
            return Err(MpcError::NotSymmetric);
        }
        self.symmetric = true;
        Ok(self)
    }

    /// `S ∪ (−S)` with duplicates removed; input order is kept, negations follow.
    pub fn symmetrize(&self) -> SampleSet {
        let mut all = self.points.clone();
        all.extend(self.points.iter().map(|p| p.iter().map(|v| -v).collect::<Vec<f64>>()));
        SampleSet {
            dim: self.dim,
            points: dedup_points(&all, DEDUP_TOL),
            symmetric: true,
            partition: None,
        }
    }

    /// Splits indices by the sign of the last coordinate with a `zero_tol`
    /// deadband.
    pub fn partition(mut self, zero_tol: f64) -> Result<SampleSet, MpcError> {
        if !self.symmetric {
            return Err(MpcError::NotSymmetric);
        }
        self.partition = Some(partition_by_last(&self.points, zero_tol));
        Ok(self)
    }

    /// Keeps the points at `keep` (in the given order); symmetry is kept as
    /// declared by the caller, the partition is dropped.
    pub fn subset(&self, keep: &[usize], symmetric: bool) -> SampleSet {
        SampleSet {
            dim: self.dim,
            points: keep.iter().map(|&i| self.points[i].clone()).collect(),
            symmetric,
            partition: None,
        }
    }

    /// CSV, one point per row, 17 significant digits, no header.
    pub fn to_csv(&self) -> String {
        let mut s = String::with_capacity(self.points.len() * self.dim * 24);
        for p in &self.points {
            for (j, v) in p.iter().enumerate() {
                if j > 0 {
                    s.push(',');
                }
                let _ = write!(s, "{}", fmt_f64(*v));
            }
            s.push('\n');
        }
        s
    }

    pub fn from_csv(text: &str) -> Result<SampleSet, MpcError> {
        let mut points = Vec::new();
        for (k, line) in text.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let p: Vec<f64> = line
                .split(',')
                .map(|t| t.trim().parse::<f64>())
                .collect::<Result<_, _>>()
                .map_err(|e| MpcError::Invalid(format!("sample CSV line {}: {e}", k + 1)))?;
            points.push(p);
        }
        let dim = points.first().map_or(0, |p| p.len());
        SampleSet::new(dim, points)
    }
}

pub(crate) fn partition_by_last(points: &[Vec<f64>], zero_tol: f64) -> Partition {
    let mut part = Partition::default();
    for (i, p) in points.iter().enumerate() {
        let last = *p.last().expect("non-empty point");
        if last.abs() <= zero_tol {
            part.zero.push(i);
        } else if last < 0.0 {
            part.neg.push(i);
        } else {
            part.pos.push(i);
        }
    }
    part
}

/// Removes points equal to an earlier one within `tol` per coordinate,
/// keeping first occurrences in their original order.
pub fn dedup_points(points: &[Vec<f64>], tol: f64) -> Vec<Vec<f64>> {
    let mut order: Vec<usize> = (0..points.len()).collect();
    let lex = |a: &Vec<f64>, b: &Vec<f64>| {
        a.iter()
            .zip(b)
            .map(|(x, y)| x.partial_cmp(y).unwrap_or(std::cmp::Ordering::Equal))
            .find(|o| o.is_ne())
            .unwrap_or(std::cmp::Ordering::Equal)
    };
    order.sort_by(|&i, &j| lex(&points[i], &points[j]).then(i.cmp(&j)));
    let mut dup = vec![false; points.len()];
    let close = |a: &[f64], b: &[f64]| a.iter().zip(b).all(|(x, y)| (x - y).abs() <= tol);
    let mut k = 0;
    while k < order.len() {
        // run of sorted neighbours within tol of the run head
        let head = order[k];
        let mut first = head;
        let mut end = k + 1;
        while end < order.len() && close(&points[order[end]], &points[head]) {
            first = first.min(order[end]);
            end += 1;
        }
        for &i in &order[k..end] {
            if i != first {
                dup[i] = true;
            }
        }
        k = end;
    }
    points
        .iter()
        .zip(dup)
        .filter(|(_, d)| !d)
        .map(|(p, _)| p.clone())
        .collect()
}

/// Runs `n_starts` closed-loop trajectories from uniform draws in X and
/// pools the states of the converged ones, plus the origin.
///
/// Start `i` uses `rng.split(i)`, and results merge in start order, so the
/// output does not depend on the worker count.
pub fn collect(
    mpc: &MpcProblem,
    n_starts: usize,
    rng: &Rng,
    conv_tol: f64,
    max_steps: usize,
) -> Result<(SampleSet, CollectReport), MpcError> {
    let qp = mpc.condense()?;
    let (lo, hi) = mpc.state_set.bounding_box()?;
    const MAX_DRAWS: usize = 1000;
    let runs: Vec<Result<(TrajectoryOutcome, usize), MpcError>> = par::map_range(n_starts, |i| {
        let mut child = rng.split(i as u64);
        let mut rejected = 0;
        let x0 = loop {
            let x = uniform_in_box(&mut child, &lo, &hi);
            if mpc.state_set.contains(&x, 0.0) {
                break x;
            }
            rejected += 1;
            if rejected >= MAX_DRAWS {
                return Err(MpcError::Invalid("could not draw a start inside X".into()));
            }
        };
        simulate(mpc, &qp, &x0, conv_tol, max_steps).map(|t| (t, rejected))
    });

    let mut report = CollectReport {
        starts: n_starts,
        ..Default::default()
    };
    let mut pooled = Vec::new();
    for run in runs {
        let (traj, rejected) = run?;
        report.rejected_draws += rejected;
        match traj.status {
            TrajectoryStatus::Converged => {
                report.converged += 1;
                pooled.extend(traj.states);
            }
            TrajectoryStatus::Infeasible => report.infeasible += 1,
            TrajectoryStatus::NotConverged => report.not_converged += 1,
        }
    }
    if report.converged == 0 {
        return Err(MpcError::EmptySampleSet);
    }
    pooled.push(vec![0.0; mpc.nx()]);
    report.pooled_states = pooled.len();
    let points = dedup_points(&pooled, DEDUP_TOL);
    Ok((SampleSet::new(mpc.nx(), points)?, report))
}
