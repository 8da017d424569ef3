//! Command-line front end; all work happens in `pseudosphere::app`.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use pseudosphere::app::{execute, Invocation};
use pseudosphere::config::Command;

#[derive(Parser)]
#[command(
    version,
    about = "Special frames and conservation laws for curvature -1 frame data"
)]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Args)]
struct Common {
    /// Run configuration (TOML).
    #[arg(long)]
    config: PathBuf,
    /// Output directory; overrides `[output] dir`.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Refine every grid axis by this factor.
    #[arg(long, default_value_t = 1)]
    grid_scale: usize,
}

#[derive(Subcommand)]
enum Cmd {
    /// Check structure equations and model residuals.
    Verify(Common),
    /// Solve for the special frame and its closed form.
    SolveFrame(Common),
    /// Solve the spectral-parameter hierarchy.
    Hierarchy(Common),
    /// Report conserved quantities and their drift.
    Conserve(Common),
    /// Rerun a command on nested grids and report observed orders.
    Converge(Common),
}

fn main() -> ExitCode {
    let (inv, common) = match Cli::parse().command {
        Cmd::Verify(c) => (Invocation::Run(Command::Verify), c),
        Cmd::SolveFrame(c) => (Invocation::Run(Command::SolveFrame), c),
        Cmd::Hierarchy(c) => (Invocation::Run(Command::Hierarchy), c),
        Cmd::Conserve(c) => (Invocation::Run(Command::Conserve), c),
        Cmd::Converge(c) => (Invocation::Converge, c),
    };
    let outcome = execute(
        inv,
        &common.config,
        common.out.as_deref(),
        common.grid_scale,
    );
    for line in &outcome.lines {
        println!("{line}");
    }
    if let Some(e) = &outcome.error {
        eprintln!("error: {e}");
    }
    ExitCode::from(outcome.code as u8)
}
