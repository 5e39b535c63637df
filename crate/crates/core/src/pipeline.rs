//! Stage functions and artifact plumbing shared by the CLI subcommands and
//! the fused `run` pipeline.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;
use std::time::Instant;

use thiserror::Error;

use crate::config::{ConfigError, RunConfig};
use crate::geometry::{area_2d, hull_2d, project, vertices, GeometryError, Polyhedron, DEFAULT_TOL};
use crate::invariant::{
    assemble, certify_invariance, containment_stats, maximal_ci_oracle, vertices_inside, Assembly, Certification,
    InvariantError, OracleResult, CONTAIN_TOL,
};
use crate::io::{certification_csv, fmt_f64, points_csv, svg, SvgLayer};
use crate::mpc::{collect, CollectReport, MpcError, SampleSet};
use crate::numerics::Rng;
use crate::pruning::{prune, PruneError, PruneReport};
use crate::pwl::{fit, FitData, FitReport, PwlError, PwlModel};
use crate::solver::SolverError;

pub const SAMPLES: &str = "samples.csv";
pub const PRUNED: &str = "pruned.csv";
pub const MODEL: &str = "model.txt";
pub const SET: &str = "invariant_set.txt";
pub const CERTIFICATION: &str = "certification.csv";
pub const ORACLE: &str = "oracle_set.txt";
pub const REPORT: &str = "report.txt";
pub const TIMINGS: &str = "timings.txt";
const SVG_MAX_POINTS: usize = 5000;

#[derive(Debug, Error)]
pub enum StageError {
    #[error(transparent)]
    Mpc(#[from] MpcError),
    #[error(transparent)]
    Prune(#[from] PruneError),
    #[error(transparent)]
    Fit(#[from] PwlError),
    #[error(transparent)]
    Invariant(#[from] InvariantError),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("{stage}: {source}")]
    Stage {
        stage: &'static str,
        #[source]
        source: StageError,
    },
    #[error("{stage}: {path}: {message}")]
    Io {
        stage: &'static str,
        path: String,
        message: String,
    },
}

pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_SOLVER: i32 = 3;
pub const EXIT_GEOMETRY: i32 = 4;
pub const EXIT_IO: i32 = 1;

fn geometry_or_solver(g: &GeometryError) -> i32 {
    match g {
        GeometryError::Solver(_) => EXIT_SOLVER,
        _ => EXIT_GEOMETRY,
    }
}

impl PipelineError {
    pub fn exit_code(&self) -> i32 {
        match self {
            PipelineError::Config(_) => EXIT_CONFIG,
            PipelineError::Io { .. } => EXIT_IO,
            PipelineError::Stage { source, .. } => match source {
                StageError::Mpc(MpcError::Invalid(_)) => EXIT_CONFIG,
                StageError::Mpc(MpcError::Geometry(g)) | StageError::Geometry(g) => geometry_or_solver(g),
                StageError::Mpc(_) => EXIT_SOLVER,
                StageError::Prune(PruneError::Geometry(g)) => geometry_or_solver(g),
                StageError::Prune(PruneError::NotSymmetric) => EXIT_GEOMETRY,
                StageError::Prune(_) => EXIT_SOLVER,
                StageError::Fit(_) => EXIT_SOLVER,
                StageError::Invariant(InvariantError::Geometry(g)) => geometry_or_solver(g),
                StageError::Invariant(InvariantError::Dimension(_)) => EXIT_GEOMETRY,
                StageError::Invariant(_) => EXIT_SOLVER,
            },
        }
    }
}

fn stage<T, E: Into<StageError>>(name: &'static str, r: Result<T, E>) -> Result<T, PipelineError> {
    r.map_err(|e| PipelineError::Stage {
        stage: name,
        source: e.into(),
    })
}

impl From<SolverError> for StageError {
    fn from(e: SolverError) -> Self {
        StageError::Mpc(MpcError::Solver(e))
    }
}

pub fn write_artifact(out: &Path, name: &str, content: &str, stage: &'static str) -> Result<(), PipelineError> {
    let io_err = |e: std::io::Error| PipelineError::Io {
        stage,
        path: out.join(name).display().to_string(),
        message: e.to_string(),
    };
    fs::create_dir_all(out).map_err(io_err)?;
    fs::write(out.join(name), content).map_err(io_err)
}

pub fn read_artifact(out: &Path, name: &str, stage: &'static str) -> Result<String, PipelineError> {
    fs::read_to_string(out.join(name)).map_err(|e| PipelineError::Io {
        stage,
        path: out.join(name).display().to_string(),
        message: e.to_string(),
    })
}

/// Closed-loop sampling; returns the symmetrized set.
pub fn sample(cfg: &RunConfig) -> Result<(SampleSet, CollectReport), PipelineError> {
    let rng = Rng::new(cfg.seed).split(0);
    let (s, rep) = stage("sample", collect(&cfg.mpc, cfg.n_starts, &rng, cfg.conv_tol, cfg.max_steps))?;
    Ok((s.symmetrize(), rep))
}

pub fn prune_samples(cfg: &RunConfig, samples: &SampleSet) -> Result<(SampleSet, PruneReport), PipelineError> {
    stage("prune", prune(samples, cfg.zero_tol))
}

pub fn fit_model(cfg: &RunConfig, pruned: &SampleSet) -> Result<(PwlModel, FitReport, usize), PipelineError> {
    let data = stage("fit", FitData::from_samples(pruned))?;
    let mut fc = cfg.fit.clone();
    fc.seed = Rng::new(cfg.seed).split(1).seed();
    let (model, report) = stage("fit", fit(&data, &fc))?;
    Ok((model, report, data.n_fit()))
}

pub fn assemble_set(cfg: &RunConfig, model: &PwlModel) -> Result<Assembly, PipelineError> {
    stage("assemble", assemble(model, &cfg.mpc.state_set))
}

pub fn certify(cfg: &RunConfig, set: &Polyhedron) -> Result<Certification, PipelineError> {
    stage("certify", certify_invariance(set, &cfg.mpc.system, &cfg.mpc.input_set))
}

pub fn oracle(cfg: &RunConfig) -> Result<OracleResult, PipelineError> {
    stage(
        "oracle",
        maximal_ci_oracle(&cfg.mpc.system, &cfg.mpc.state_set, &cfg.mpc.input_set, cfg.oracle_iters, DEFAULT_TOL),
    )
}

pub fn load_samples(out: &Path, stage_name: &'static str) -> Result<SampleSet, PipelineError> {
    let text = read_artifact(out, SAMPLES, stage_name)?;
    let s = stage(stage_name, SampleSet::from_csv(&text))?;
    stage(stage_name, s.assume_symmetric())
}

pub fn load_pruned(cfg: &RunConfig, out: &Path) -> Result<SampleSet, PipelineError> {
    let text = read_artifact(out, PRUNED, "fit")?;
    let s = stage("fit", SampleSet::from_csv(&text))?;
    let s = stage("fit", s.assume_symmetric())?;
    stage("fit", s.partition(cfg.zero_tol))
}

pub fn load_model(out: &Path) -> Result<PwlModel, PipelineError> {
    stage("assemble", PwlModel::from_text(&read_artifact(out, MODEL, "assemble")?))
}

pub fn load_set(out: &Path, name: &str, stage_name: &'static str) -> Result<Polyhedron, PipelineError> {
    stage(stage_name, Polyhedron::from_text(&read_artifact(out, name, stage_name)?))
}

fn polygon(p: &Polyhedron) -> Result<Vec<[f64; 2]>, GeometryError> {
    let v: Vec<[f64; 2]> = vertices(p, DEFAULT_TOL)?.into_iter().map(|v| [v[0], v[1]]).collect();
    hull_2d(&v)
}

/// Coordinate-plane projections: for every pair `(i, j)` the projected set's
/// polygon, the projected samples, and an SVG overlay. Returns
/// `(file name, content)` pairs.
pub fn projections(
    cfg: &RunConfig,
    set: &Polyhedron,
    samples: &SampleSet,
    oracle_set: Option<&Polyhedron>,
) -> Result<Vec<(String, String)>, PipelineError> {
    let n = cfg.nx();
    let (xlo, xhi) = stage("plot", cfg.mpc.state_set.bounding_box())?;
    let mut files = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            let tag = format!("x{}_x{}", i + 1, j + 1);
            let poly = stage("plot", project(set, &[i, j]).and_then(|p| polygon(&p)))?;
            let oracle_poly = match oracle_set {
                Some(o) => Some(stage("plot", project(o, &[i, j]).and_then(|p| polygon(&p)))?),
                None => None,
            };
            let pts: Vec<[f64; 2]> = samples.points().iter().map(|p| [p[i], p[j]]).collect();
            let stride = pts.len().div_ceil(SVG_MAX_POINTS).max(1);
            let shown: Vec<[f64; 2]> = pts.iter().step_by(stride).copied().collect();
            let mut layers = Vec::new();
            if let Some(o) = &oracle_poly {
                layers.push(SvgLayer {
                    polygon: o,
                    stroke: "darkred",
                    fill: "red",
                });
            }
            layers.push(SvgLayer {
                polygon: &poly,
                stroke: "black",
                fill: "yellow",
            });
            files.push((format!("projection_{tag}.csv"), points_csv(&poly)));
            files.push((format!("projection_{tag}_samples.csv"), points_csv(&pts)));
            if let Some(o) = &oracle_poly {
                files.push((format!("projection_{tag}_oracle.csv"), points_csv(o)));
            }
            files.push((format!("plot_{tag}.svg"), svg([xlo[i], xlo[j]], [xhi[i], xhi[j]], &shown, &layers)));
        }
    }
    Ok(files)
}

pub fn write_projections(
    cfg: &RunConfig,
    out: &Path,
    set: &Polyhedron,
    samples: &SampleSet,
    oracle_set: Option<&Polyhedron>,
) -> Result<usize, PipelineError> {
    let files = projections(cfg, set, samples, oracle_set)?;
    for (name, content) in &files {
        write_artifact(out, name, content, "plot")?;
    }
    Ok(files.len())
}

#[derive(Debug, Clone)]
pub struct RunSummary {
    pub collect: CollectReport,
    pub samples: SampleSet,
    pub pruned: SampleSet,
    pub prune: PruneReport,
    pub model: PwlModel,
    pub fit: FitReport,
    pub fit_points: usize,
    pub assembly: Assembly,
    pub containment: f64,
    pub vertices_in_x: bool,
    pub certification: Certification,
    pub oracle: Option<OracleResult>,
    pub area_ratio: Option<f64>,
    pub timings: Vec<(&'static str, f64)>,
}

impl RunSummary {
    /// Deterministic summary; timings live in a separate file.
    pub fn report(&self, cfg: &RunConfig) -> String {
        let mut s = String::new();
        let c = &self.collect;
        let mut kv = |k: &str, v: String| {
            let _ = writeln!(s, "{k}: {v}");
        };
        kv("name", cfg.name.clone());
        kv("seed", cfg.seed.to_string());
        kv("state_dim", cfg.nx().to_string());
        kv("starts", c.starts.to_string());
        kv("converged", c.converged.to_string());
        kv("infeasible", c.infeasible.to_string());
        kv("not_converged", c.not_converged.to_string());
        kv("pooled_states", c.pooled_states.to_string());
        kv("samples_symmetrized", self.samples.len().to_string());
        kv("pruned_after_simplex", self.prune.after_simplex.to_string());
        kv("pruned", self.pruned.len().to_string());
        kv("fit_points", self.fit_points.to_string());
        kv("restarts_run", self.fit.runs.len().to_string());
        kv("safeguard_steps", self.fit.runs.iter().map(|r| r.safeguards).sum::<usize>().to_string());
        kv("best_m", self.fit.best_m.to_string());
        kv("best_restart", self.fit.best_restart.to_string());
        kv("objective", fmt_f64(self.fit.best_objective));
        kv("rows_before_reduction", self.assembly.raw.n_rows().to_string());
        kv("rows", self.assembly.set.n_rows().to_string());
        kv("zero_symmetric", self.assembly.set.is_zero_symmetric(1e-9).to_string());
        kv("sample_containment", fmt_f64(self.containment));
        kv("vertices_inside_x", self.vertices_in_x.to_string());
        kv("vertices", self.certification.vertices.len().to_string());
        kv("certification_max_violation", fmt_f64(self.certification.max_violation));
        if let Some(o) = &self.oracle {
            kv("oracle_iterations", o.iterations.to_string());
            kv("oracle_converged", o.converged.to_string());
            kv("oracle_rows", o.set.n_rows().to_string());
        }
        if let Some(r) = self.area_ratio {
            kv("area_ratio_to_oracle", fmt_f64(r));
        }
        s
    }

    pub fn timings_text(&self) -> String {
        self.timings.iter().map(|(k, v)| format!("{k}_seconds: {v:.3}\n")).collect()
    }
}

/// Full pipeline with every artifact written to `out`.
pub fn run_pipeline(cfg: &RunConfig, out: &Path) -> Result<RunSummary, PipelineError> {
    let mut timings = Vec::new();
    let mut clock = Instant::now();
    let mut lap = |name: &'static str, timings: &mut Vec<(&'static str, f64)>| {
        timings.push((name, clock.elapsed().as_secs_f64()));
        clock = Instant::now();
    };

    let (samples, collect) = sample(cfg)?;
    write_artifact(out, SAMPLES, &samples.to_csv(), "sample")?;
    lap("sample", &mut timings);

    let (pruned, prune_report) = prune_samples(cfg, &samples)?;
    write_artifact(out, PRUNED, &pruned.to_csv(), "prune")?;
    lap("prune", &mut timings);

    let (model, fit_report, fit_points) = fit_model(cfg, &pruned)?;
    write_artifact(out, MODEL, &model.to_text(), "fit")?;
    lap("fit", &mut timings);

    let assembly = assemble_set(cfg, &model)?;
    write_artifact(out, SET, &assembly.set.to_text(), "assemble")?;
    let containment = containment_stats(&assembly.set, samples.points());
    let (vertices_in_x, _) = stage("assemble", vertices_inside(&assembly.set, &cfg.mpc.state_set, CONTAIN_TOL))?;
    lap("assemble", &mut timings);

    let certification = certify(cfg, &assembly.set)?;
    write_artifact(out, CERTIFICATION, &certification_csv(&certification), "certify")?;
    lap("certify", &mut timings);

    let (oracle_result, area_ratio) = if cfg.oracle {
        let o = oracle(cfg)?;
        write_artifact(out, ORACLE, &o.set.to_text(), "oracle")?;
        let ratio = if cfg.nx() == 2 {
            Some(stage("oracle", area_2d(&assembly.set))? / stage("oracle", area_2d(&o.set))?)
        } else {
            None
        };
        (Some(o), ratio)
    } else {
        (None, None)
    };
    lap("oracle", &mut timings);

    write_projections(cfg, out, &assembly.set, &samples, oracle_result.as_ref().map(|o| &o.set))?;
    lap("plot", &mut timings);

    let summary = RunSummary {
        collect,
        samples,
        pruned,
        prune: prune_report,
        model,
        fit: fit_report,
        fit_points,
        assembly,
        containment,
        vertices_in_x,
        certification,
        oracle: oracle_result,
        area_ratio,
        timings,
    };
    write_artifact(out, REPORT, &summary.report(cfg), "report")?;
    write_artifact(out, TIMINGS, &summary.timings_text(), "report")?;
    Ok(summary)
}
