//! `vframe`: run adaptive simulations, build heat maps, compile and
//! benchmark decision trees.

mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

#[derive(Debug, Parser)]
#[command(name = "vframe", version, about = "Validity-frame driven adaptive model selection")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Simulate a scenario and write the per-step trace.
    Run {
        #[arg(long)]
        scenario: PathBuf,
        #[arg(long)]
        library: PathBuf,
        /// Heat-map report used to order the tree's factor tests.
        #[arg(long)]
        heatmap: Option<PathBuf>,
        /// Per-step budget; overrides the scenario's.
        #[arg(long)]
        deadline: Option<f64>,
        /// Always run this frame instead of selecting one.
        #[arg(long)]
        force_model: Option<String>,
        /// Steps between original/approximation comparisons.
        #[arg(long)]
        recheck: Option<usize>,
        #[arg(long, default_value = "trace.csv")]
        out: PathBuf,
        /// Reserved; the simulation is deterministic.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Aggregate traces into a context heat-map report.
    Heatmap {
        #[arg(required = true)]
        traces: Vec<PathBuf>,
        /// Write the report here instead of standard output.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Compile a library into a decision tree and print it.
    Compile {
        #[arg(long)]
        library: PathBuf,
        #[arg(long)]
        heatmap: Option<PathBuf>,
        #[arg(long)]
        deadline: Option<f64>,
    },
    /// Compare tree lookup with graph search on a list of contexts.
    Bench {
        #[arg(long)]
        library: PathBuf,
        #[arg(long)]
        contexts: PathBuf,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run {
            scenario,
            library,
            heatmap,
            deadline,
            force_model,
            recheck,
            out,
            seed: _,
        } => commands::run(&commands::RunArgs {
            scenario,
            library,
            heatmap,
            deadline,
            force_model,
            recheck,
            out,
        }),
        Command::Heatmap { traces, out } => commands::heatmap(&traces, out.as_deref()),
        Command::Compile {
            library,
            heatmap,
            deadline,
        } => commands::compile(&library, heatmap.as_deref(), deadline),
        Command::Bench { library, contexts } => commands::bench(&library, &contexts),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(failure) => {
            eprintln!("error: {:#}", failure.error);
            ExitCode::from(failure.code)
        }
    }
}
