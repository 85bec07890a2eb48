//! Command-line front end for the amplified-search trajectory solver.
//!
//! Subcommands cover the shipped benchmarks (a static path-planning
//! graph, double-integrator parking, cart-pole swing-up), arbitrary QUBO
//! problem files, grid sweeps, and report tabulation. Exit codes:
//! 0 success, 2 configuration error, 3 file error, 4 solver error.

mod config;
mod errors;
mod output;
mod report;
mod run;
mod sweep;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use crate::config::CommonArgs;
use crate::errors::CliError;

#[derive(Parser)]
#[command(
    name = "quantgraph",
    version,
    about = "Simulator-backed amplified-search solver for minimum-cost paths and receding-horizon control",
    propagate_version = true
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Find a cheapest source→sink path on a weighted DAG
    StaticGraph {
        /// Graph JSON file {nodes, edges: [[from, to, weight], ...],
        /// source, sink}; the built-in eight-node instance runs if omitted
        #[arg(value_name = "GRAPH")]
        graph: Option<PathBuf>,
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Park a double integrator at the reference point (closed loop)
    DoubleIntegrator {
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Swing a cart-pole up from hanging (closed loop; needs
    /// --no-local-stage, the warm-start stage is linear-only)
    Cartpole {
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Minimize a QUBO problem file {n, Q, q, c}
    QuboFile {
        /// Problem JSON: n variables, n×n matrix Q, length-n vector q,
        /// scalar c
        #[arg(value_name = "PATH")]
        path: PathBuf,
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Run a sweep grid file (kind: complexity or precision)
    Sweep {
        #[arg(value_name = "GRID")]
        grid: PathBuf,
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Tabulate previously written summary JSON files
    Report {
        #[arg(value_name = "SUMMARY", num_args = 1..)]
        summaries: Vec<PathBuf>,
    },
}

fn dispatch(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::StaticGraph { graph, common } => run::run_graph(graph.as_deref(), &common),
        Command::DoubleIntegrator { common } => run::run_control("double-integrator", &common),
        Command::Cartpole { common } => run::run_control("cartpole", &common),
        Command::QuboFile { path, common } => run::run_qubo(&path, &common),
        Command::Sweep { grid, common } => sweep::run_sweep(&grid, &common),
        Command::Report { summaries } => report::run_report(&summaries),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("{err}");
            ExitCode::from(err.exit_code())
        }
    }
}
