//! `capcover`: batch driver for cap geometry, coverage sweeps, bound tables,
//! verification suites and configuration search.
//!
//! Exit codes: 0 ok, 1 a verification failed, 2 bad usage or an argument
//! outside a function's domain, 3 a simulated mean strayed more than 6 SE
//! from its closed form.

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};

mod commands;
mod config;
mod output;

use output::Format;

#[derive(Parser)]
#[command(name = "capcover", version, about = "Partial coverings of the sphere by geodesic caps")]
struct Cli {
    /// Worker threads; defaults to one per hardware thread. Results do not depend on it.
    #[arg(long, global = true)]
    threads: Option<usize>,

    /// JSON experiment config, or an earlier output record to repeat. Its
    /// fields override the matching flags.
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,

    /// Leave wall-clock time out of records, so reruns are byte-identical.
    #[arg(long, global = true)]
    omit_timing: bool,

    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Default)]
pub struct Grid {
    /// Ambient dimension(s) d; the sphere is S^{d-1}.
    #[arg(short = 'd', long = "dim", value_delimiter = ',')]
    pub dims: Vec<usize>,
    /// Number(s) of caps N.
    #[arg(short = 'n', long = "ncaps", value_delimiter = ',')]
    pub ncaps: Vec<usize>,
    /// Total mass(es) alpha, split evenly over the caps.
    #[arg(short = 'a', long = "alpha", value_delimiter = ',')]
    pub alphas: Vec<f64>,
}

#[derive(Args, Debug)]
pub struct Output {
    #[arg(long, value_enum)]
    pub format: Option<Format>,
    /// Output file; standard output when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Convert between cap mass and geodesic radius.
    Caps(commands::CapsArgs),
    /// Monte Carlo coverage of random configurations against the closed form.
    Simulate(commands::SimulateArgs),
    /// Two-sided bounds on the best coverage, with the Euler bracket.
    Bounds(commands::BoundsArgs),
    /// Numerical checks of the inequalities behind the bounds.
    Verify(commands::VerifyArgs),
    /// Search for configurations covering more than random ones.
    Optimize(commands::OptimizeArgs),
}

fn run(cli: Cli) -> Result<u8> {
    if let Some(t) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build_global()
            .context("setting up worker threads")?;
    }
    let file = match &cli.config {
        Some(p) => config::load(p)?,
        None => config::ExperimentConfig::default(),
    };
    let timing = !cli.omit_timing;
    match cli.command {
        Command::Caps(a) => commands::caps(a, file, timing),
        Command::Simulate(a) => commands::simulate(a, file, timing),
        Command::Bounds(a) => commands::bounds(a, file, timing),
        Command::Verify(a) => commands::verify(a, file, timing),
        Command::Optimize(a) => commands::optimize(a, file, timing),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
