use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};
use starris::checks;
use starris::harness::{run_experiment, run_trace, ExperimentSpec, DEFAULT_OUT_DIR, OUT_DIR_ENV};
use starris::par::{with_jobs, Execution};

/// Sum-rate optimisation experiments for STAR-RIS downlinks.
#[derive(Debug, Parser)]
#[command(name = "starris", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Base seed; overrides `seed_base` of the experiment file.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Output directory. Falls back to the experiment file's `output_dir`,
    /// then to $STARRIS_OUT_DIR, then to ./results.
    #[arg(long, global = true)]
    out_dir: Option<PathBuf>,

    /// Worker threads; 1 runs everything on the calling thread.
    #[arg(long, global = true)]
    jobs: Option<usize>,

    /// Outer-iteration cap of every run.
    #[arg(long, global = true)]
    max_iter: Option<usize>,

    /// Relative surrogate change that stops a run.
    #[arg(long, global = true)]
    tol: Option<f64>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run an experiment file and write results.csv, summary.csv and runtime_cdf.csv.
    Run { spec: PathBuf },
    /// Run the brute-force oracle checks at reduced size.
    OracleSuite,
    /// Write per-iteration traces of one run of each listed algorithm.
    Trace { spec: PathBuf },
}

fn load_spec(path: &Path, cli: &Cli) -> Result<ExperimentSpec> {
    let mut spec = ExperimentSpec::load(path).with_context(|| format!("loading experiment {}", path.display()))?;
    if let Some(seed) = cli.seed {
        spec.seed_base = seed;
    }
    if let Some(max_iter) = cli.max_iter {
        spec.options.max_iter = max_iter;
    }
    if let Some(tol) = cli.tol {
        spec.options.tol = tol;
    }
    spec.validate()?;
    Ok(spec)
}

fn out_dir(cli: &Cli, spec: Option<&ExperimentSpec>) -> PathBuf {
    cli.out_dir
        .clone()
        .or_else(|| spec.and_then(|s| s.output_dir.clone()))
        .or_else(|| std::env::var_os(OUT_DIR_ENV).map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from(DEFAULT_OUT_DIR))
}

fn execution(cli: &Cli) -> Execution {
    if cli.jobs == Some(1) {
        Execution::Sequential
    } else {
        Execution::Auto
    }
}

fn run(cli: &Cli) -> Result<bool> {
    let exec = execution(cli);
    match &cli.command {
        Command::Run { spec } => {
            let spec = load_spec(spec, cli)?;
            let dir = out_dir(cli, Some(&spec));
            let output = with_jobs(cli.jobs, || run_experiment(&spec, &dir, exec))?;
            println!("{:<24} {:>10} {:>6} {:>10} {:>8}", "algorithm", spec.sweep.label(), "runs", "mean", "std");
            for s in &output.summary {
                println!(
                    "{:<24} {:>10} {:>6} {:>10.4} {:>8.4}",
                    s.algorithm.name(),
                    s.sweep_value,
                    s.runs,
                    s.mean_sum_rate,
                    s.std_sum_rate
                );
            }
            for f in &output.files {
                println!("wrote {}", f.display());
            }
            Ok(true)
        }
        Command::OracleSuite => {
            let outcomes = with_jobs(cli.jobs, || checks::quick_suite(exec))?;
            for o in &outcomes {
                println!("{}", o.line());
            }
            Ok(outcomes.iter().all(|o| o.passed))
        }
        Command::Trace { spec } => {
            let spec = load_spec(spec, cli)?;
            let dir = out_dir(cli, Some(&spec));
            let (rows, path) = run_trace(&spec, spec.seed_base, &dir)?;
            if let Some(last) = rows.last() {
                println!("{} iterations, final surrogate {:.6}", last.iteration, last.surrogate);
            }
            println!("wrote {}", path.display());
            Ok(true)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
