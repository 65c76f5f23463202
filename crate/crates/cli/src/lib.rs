//! Command implementations and output formats behind the `qperiods` binary.

pub mod commands;
pub mod output;

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Parser)]
#[command(name = "qperiods", version, about = "Exact quantum periods and Frobenius structures of small dgBV models")]
pub struct Cli {
    /// Worker threads for `verify-all` (results are merged in model order).
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand)]
pub enum Command {
    /// Run the load-time axiom suite.
    Check(Source),
    /// Solve the Maurer–Cartan equation for the mini-versal family.
    McSolve(Run),
    /// Full pipeline: frame, Ψ^W, flat coordinates, connection, A, η.
    Periods(Run),
    /// Only the Frobenius data: A, η, c and the potential.
    Constants(Run),
    /// Every invariant, the period checks and the oracle comparison.
    VerifyAll(Verify),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

#[derive(Args, Clone)]
pub struct Source {
    /// Model file (JSON).
    #[arg(long, conflicts_with = "builtin")]
    pub model: Option<PathBuf>,
    /// Shipped model: torus.1, torus.2, obstructed, random.<seed>.
    #[arg(long)]
    pub builtin: Option<String>,
    #[arg(long, value_enum, default_value = "json")]
    pub format: Format,
    /// Write to this file instead of stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Seed for random builtins named `random` and for sampled checks.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Args, Clone)]
pub struct Run {
    #[command(flatten)]
    pub source: Source,
    /// Truncation order N (defaults to the model's own).
    #[arg(long)]
    pub order: Option<u32>,
    /// ħ-window as LO:HI in half-steps.
    #[arg(long, allow_hyphen_values = true)]
    pub window: Option<String>,
}

#[derive(Args, Clone)]
pub struct Verify {
    #[command(flatten)]
    pub run: Run,
    /// Without --model/--builtin: number of random models after torus.1 and torus.2.
    #[arg(long, default_value_t = 20)]
    pub random: u64,
    /// Size bound for the random models.
    #[arg(long, default_value_t = 8)]
    pub max_dim_h: usize,
}

/// Runs a parsed command line: `Ok(false)` means a check failed.
pub fn execute(cli: &Cli) -> commands::CliResult<bool> {
    match &cli.command {
        Command::Check(s) => commands::check(s),
        Command::McSolve(r) => commands::mc_solve(r),
        Command::Periods(r) => commands::periods(r, false),
        Command::Constants(r) => commands::periods(r, true),
        Command::VerifyAll(v) => commands::verify_all(v, cli.threads),
    }
}
