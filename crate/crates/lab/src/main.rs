use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand};
use nls_lab::config::{read_matrix, ExperimentConfig};
use nls_lab::error::LabError;
use nls_lab::experiments::run_experiment;
use nls_lab::output::{run_dir, write_outcome, Manifest};
use rayon::prelude::*;

/// Pseudospectral defocusing NLS experiments.
#[derive(Parser, Debug)]
#[command(name = "nls-lab", version)]
struct Cli {
    /// Output root; each run writes into its own subdirectory unless the
    /// config sets `output`.
    #[arg(
        long,
        global = true,
        env = "NLS_LAB_OUT",
        default_value = "nls-lab-out"
    )]
    out: PathBuf,
    /// Worker threads (0 = one per core).
    #[arg(long, global = true, default_value_t = 0)]
    workers: usize,
    /// Overrides the config seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run one experiment config.
    Run { config: PathBuf },
    /// Parse and validate a config without running it.
    Validate { config: PathBuf },
    /// Run every config listed in a matrix file (one path per line, relative
    /// to the matrix file; `#` starts a comment).
    Suite { matrix: PathBuf },
}

fn load(path: &Path, seed: Option<u64>) -> Result<ExperimentConfig, LabError> {
    let cfg = ExperimentConfig::from_file(path)?;
    match seed {
        Some(s) => cfg.with_seed(s),
        None => Ok(cfg),
    }
}

fn execute(cfg: &ExperimentConfig, out: &Path) -> Result<(bool, PathBuf), LabError> {
    let start = Instant::now();
    let outcome = run_experiment(cfg)?;
    let manifest = Manifest::new(cfg, &outcome, start.elapsed());
    let dir = cfg.output.clone().unwrap_or_else(|| run_dir(out, cfg));
    write_outcome(&dir, &outcome, &manifest)?;
    Ok((outcome.passed, dir))
}

fn report(name: &str, result: &Result<(bool, PathBuf), LabError>) {
    match result {
        Ok((passed, dir)) => println!(
            "{} {name} -> {}",
            if *passed { "PASS" } else { "FAIL" },
            dir.display()
        ),
        Err(e) => println!("ERROR {name}: {e}"),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    if cli.workers > 0 {
        if let Err(e) = rayon::ThreadPoolBuilder::new()
            .num_threads(cli.workers)
            .build_global()
        {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    }
    match &cli.command {
        Command::Validate { config } => match load(config, cli.seed) {
            Ok(cfg) => {
                println!("ok {} {}", cfg.kind.name(), cfg.hash());
                ExitCode::SUCCESS
            }
            Err(e) => {
                eprintln!("error: {e}");
                ExitCode::from(2)
            }
        },
        Command::Run { config } => {
            let result = load(config, cli.seed).and_then(|cfg| execute(&cfg, &cli.out));
            report(&config.display().to_string(), &result);
            match result {
                Ok((true, _)) => ExitCode::SUCCESS,
                Ok((false, _)) => ExitCode::from(1),
                Err(_) => ExitCode::from(2),
            }
        }
        Command::Suite { matrix } => {
            let entries = match read_matrix(matrix) {
                Ok(e) => e,
                Err(e) => {
                    eprintln!("error: {e}");
                    return ExitCode::from(2);
                }
            };
            // Configs are validated up front so a typo fails the batch before
            // any stepping.
            let configs = match entries
                .iter()
                .map(|p| load(p, cli.seed))
                .collect::<Result<Vec<_>, _>>()
            {
                Ok(c) => c,
                Err(e) => {
                    eprintln!("error: {e}");
                    return ExitCode::from(2);
                }
            };
            let results: Vec<_> = configs.par_iter().map(|c| execute(c, &cli.out)).collect();
            for (p, r) in entries.iter().zip(&results) {
                report(&p.display().to_string(), r);
            }
            if results.iter().any(Result::is_err) {
                ExitCode::from(2)
            } else if results.iter().all(|r| matches!(r, Ok((true, _)))) {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            }
        }
    }
}
