//! Command-line front end for the two-phase solvers: JSON run
//! configurations, CSV output and the verification suite runner.

pub mod commands;
pub mod config;
pub mod error;
pub mod expr;
pub mod output;

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use twophase_core::parabolic::StepMode;

use commands::{Overrides, VerifyOptions};
use error::CliResult;

#[derive(Debug, Parser)]
#[command(name = "twophase", version, about = "Finite-difference solvers for the two-phase obstacle-like problem")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct CommonArgs {
    /// JSON run configuration.
    #[arg(long, value_name = "PATH")]
    pub config: PathBuf,
    /// Output directory (overrides output.directory).
    #[arg(long, value_name = "DIR")]
    pub out: Option<PathBuf>,
    /// Seed recorded in the manifest.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Time-stepping mode (overrides solver.mode).
    #[arg(long)]
    pub mode: Option<StepMode>,
}

impl CommonArgs {
    fn overrides(&self) -> Overrides {
        Overrides {
            out: self.out.clone(),
            seed: self.seed,
            mode: self.mode,
        }
    }
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    /// Output directory for the report.
    #[arg(long, value_name = "DIR", default_value = commands::DEFAULT_OUT_DIR)]
    pub out: PathBuf,
    #[arg(long, default_value_t = commands::DEFAULT_SEED)]
    pub seed: u64,
    #[arg(long, default_value_t = 500)]
    pub explicit_trials: usize,
    #[arg(long, default_value_t = 1000)]
    pub fuzz_trials: usize,
    #[arg(long, default_value_t = 1000)]
    pub elliptic_trials: usize,
    #[arg(long, default_value_t = 50)]
    pub oracle_trials: usize,
    #[arg(long, default_value_t = 100)]
    pub comparison_trials: usize,
    /// Nodes per axis for the band check on the built-in cases.
    #[arg(long, default_value_t = twophase_core::problem::REFERENCE_NODES)]
    pub band_nodes: usize,
    /// Add a fuzz check at c = 0.6, which must fail.
    #[arg(long)]
    pub inject_cfl_violation: bool,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// March a time-dependent problem and write the trace.
    SolveParabolic(CommonArgs),
    /// Solve the steady membrane problem.
    SolveElliptic(CommonArgs),
    /// Estimate an order of convergence or consistency.
    ConvergenceStudy(CommonArgs),
    /// Run the randomized property suite.
    Verify(VerifyArgs),
}

/// Runs a parsed command line; the message is printed on success.
pub fn run(cli: Cli) -> CliResult<String> {
    match cli.command {
        Command::SolveParabolic(a) => commands::solve_parabolic_cmd(&a.config, &a.overrides()),
        Command::SolveElliptic(a) => commands::solve_elliptic_cmd(&a.config, &a.overrides()),
        Command::ConvergenceStudy(a) => commands::convergence_study_cmd(&a.config, &a.overrides()),
        Command::Verify(a) => commands::verify_cmd(&VerifyOptions {
            seed: a.seed,
            out: a.out,
            explicit_trials: a.explicit_trials,
            fuzz_trials: a.fuzz_trials,
            elliptic_trials: a.elliptic_trials,
            oracle_trials: a.oracle_trials,
            comparison_trials: a.comparison_trials,
            band_nodes: a.band_nodes,
            inject_cfl_violation: a.inject_cfl_violation,
        }),
    }
}
