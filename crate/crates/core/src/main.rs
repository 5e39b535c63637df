use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use invset::config::{ConfigError, RunConfig};
use invset::io::certification_csv;
use invset::pipeline::{self as pl, PipelineError};

#[derive(Parser)]
#[command(name = "invset", version, about = "Polyhedral approximation of control invariant sets from MPC samples")]
struct Cli {
    /// JSON problem description.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Overrides the seed in the config.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    workers: Option<usize>,
    /// Output directory (default: the config's `out`, else `out/<name>`).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Clone, Copy)]
enum Command {
    /// Full pipeline: sample, prune, fit, assemble, certify, oracle, plot.
    Run,
    /// Closed-loop sampling -> samples.csv
    Sample,
    /// samples.csv -> pruned.csv
    Prune,
    /// pruned.csv -> model.txt
    Fit,
    /// model.txt -> invariant_set.txt
    Assemble,
    /// invariant_set.txt -> certification.csv
    Certify,
    /// Backward-reachability fixed point -> oracle_set.txt
    Oracle,
    /// invariant_set.txt + samples.csv -> projection files and SVG
    Plot,
}

fn execute(cmd: Command, cfg: &RunConfig, out: &Path) -> Result<(), PipelineError> {
    match cmd {
        Command::Run => {
            let s = pl::run_pipeline(cfg, out)?;
            print!("{}", s.report(cfg));
        }
        Command::Sample => {
            let (samples, rep) = pl::sample(cfg)?;
            pl::write_artifact(out, pl::SAMPLES, &samples.to_csv(), "sample")?;
            println!("converged {} of {} starts, {} samples", rep.converged, rep.starts, samples.len());
        }
        Command::Prune => {
            let samples = pl::load_samples(out, "prune")?;
            let (pruned, _) = pl::prune_samples(cfg, &samples)?;
            pl::write_artifact(out, pl::PRUNED, &pruned.to_csv(), "prune")?;
            println!("{} of {} samples kept", pruned.len(), samples.len());
        }
        Command::Fit => {
            let pruned = pl::load_pruned(cfg, out)?;
            let (model, rep, _) = pl::fit_model(cfg, &pruned)?;
            pl::write_artifact(out, pl::MODEL, &model.to_text(), "fit")?;
            println!("M = {}, J = {:e}", rep.best_m, rep.best_objective);
        }
        Command::Assemble => {
            let model = pl::load_model(out)?;
            let asm = pl::assemble_set(cfg, &model)?;
            pl::write_artifact(out, pl::SET, &asm.set.to_text(), "assemble")?;
            println!("{} rows ({} before reduction)", asm.set.n_rows(), asm.raw.n_rows());
        }
        Command::Certify => {
            let set = pl::load_set(out, pl::SET, "certify")?;
            let cert = pl::certify(cfg, &set)?;
            pl::write_artifact(out, pl::CERTIFICATION, &certification_csv(&cert), "certify")?;
            println!("max violation {:e} over {} vertices", cert.max_violation, cert.vertices.len());
        }
        Command::Oracle => {
            let res = pl::oracle(cfg)?;
            pl::write_artifact(out, pl::ORACLE, &res.set.to_text(), "oracle")?;
            println!("{} rows after {} iterations (converged: {})", res.set.n_rows(), res.iterations, res.converged);
        }
        Command::Plot => {
            let set = pl::load_set(out, pl::SET, "plot")?;
            let samples = pl::load_samples(out, "plot")?;
            let oracle = if out.join(pl::ORACLE).exists() {
                Some(pl::load_set(out, pl::ORACLE, "plot")?)
            } else {
                None
            };
            let n = pl::write_projections(cfg, out, &set, &samples, oracle.as_ref())?;
            println!("{n} projection files written");
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let Some(path) = cli.config.as_deref() else {
        eprintln!("error: --config is required");
        return ExitCode::from(pl::EXIT_CONFIG as u8);
    };
    let cfg = match RunConfig::from_path(path) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: config: {e}");
            let code = if matches!(e, ConfigError::Read(_)) { pl::EXIT_IO } else { pl::EXIT_CONFIG };
            return ExitCode::from(code as u8);
        }
    };
    let cfg = match cli.seed {
        Some(s) => cfg.with_seed(s),
        None => cfg,
    };
    let out = cli
        .out
        .clone()
        .or_else(|| cfg.out.as_ref().map(PathBuf::from))
        .unwrap_or_else(|| Path::new("out").join(&cfg.name));
    let result = match cli.workers {
        Some(n) => invset::par::with_workers(n, || execute(cli.command, &cfg, &out)),
        None => execute(cli.command, &cfg, &out),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
