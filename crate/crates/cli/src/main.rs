//! `repweight`: representative sample weighting from the command line.
//!
//! Exit codes: 0 converged, 1 user error, 2 not converged, 3 infeasible.

mod commands;
mod config;
mod output;
mod pipeline;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use crate::config::{Overrides, Run};

const EXIT_USER_ERROR: u8 = 1;

#[derive(Parser, Debug)]
#[command(name = "repweight", version, about = "Representative sample weighting")]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Run configuration (TOML).
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,

    /// Output directory; overrides `output` in the config.
    #[arg(long, global = true, value_name = "DIR")]
    output: Option<PathBuf>,

    /// Seed for every random draw; overrides `seed` in the config.
    #[arg(long, global = true, value_name = "N")]
    seed: Option<u64>,

    /// Number of weighted random subsets to compare a selection against.
    #[arg(long, global = true, value_name = "R")]
    baseline_draws: Option<usize>,

    #[arg(long, global = true, value_name = "N")]
    max_iter: Option<usize>,

    /// ADMM penalty parameter.
    #[arg(long, global = true, value_name = "X")]
    rho: Option<f64>,

    /// Progress messages on stderr.
    #[arg(long, global = true)]
    verbose: bool,
}

#[derive(Subcommand, Debug, Clone, Copy)]
enum Command {
    /// Solve a convex weighting problem with ADMM.
    Solve,
    /// Select k samples with equal weights (boolean regularizer).
    Select,
    /// Maximum-entropy weights by raking over cross groups.
    Rake,
    /// Kolmogorov-Smirnov comparison of weighted samples against a reference table.
    Compare,
    /// Draw a skewed subsample of a table.
    Skew,
}

fn run(cli: &Cli) -> anyhow::Result<i32> {
    let path = cli
        .config
        .as_ref()
        .ok_or_else(|| anyhow::anyhow!("--config PATH is required"))?;
    let overrides = Overrides {
        output: cli.output.clone(),
        seed: cli.seed,
        baseline_draws: cli.baseline_draws,
        max_iter: cli.max_iter,
        rho: cli.rho,
    };
    let run = Run::load(path, &overrides)?;
    match cli.command {
        Command::Solve => commands::solve(&run, cli.verbose),
        Command::Select => commands::select(&run, cli.verbose),
        Command::Rake => commands::rake_cmd(&run, cli.verbose),
        Command::Compare => commands::compare(&run, cli.verbose),
        Command::Skew => commands::skew(&run, cli.verbose),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USER_ERROR } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(&cli) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(EXIT_USER_ERROR)
        }
    }
}
