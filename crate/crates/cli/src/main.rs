//! Command-line driver for the saddle-solution toolkit.
//!
//! Each subcommand reads a flat sectioned key-value configuration, runs the
//! corresponding pipeline from the core library, writes CSV outputs plus a
//! `run_summary.json` into the output directory, and exits with
//! 0 (success), 2 (validation failure: bad flags, malformed or missing
//! configuration, out-of-range values), or 3 (a solver failed to converge).

mod config;
mod pipelines;

use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand};
use serde_json::{json, Value};

use config::{CliError, CliResult, Config, Resolver};
use pipelines::Runner;

#[derive(Parser)]
#[command(
    name = "saddle",
    version,
    about = "Saddle-shaped solutions of the half-Laplacian bistable equation",
    arg_required_else_help = true
)]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Path to the run configuration (sectioned key = value file).
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,

    /// Output directory for CSV files and the run summary.
    #[arg(long, global = true, value_name = "DIR", default_value = "out")]
    out: PathBuf,

    /// Worker threads. Recorded in the summary; the numerical pipelines
    /// themselves run sequentially, so this does not change any output.
    #[arg(long, global = true, default_value_t = 1)]
    threads: usize,

    /// Seed for randomized test-function sampling. Deterministic pipelines
    /// ignore it; identical seed, configuration, and build give identical
    /// CSV output.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
}

#[derive(Subcommand, Clone, Copy)]
enum Command {
    /// Solve the one-dimensional layer extension problem and check the
    /// fractional operator on its trace.
    Layer,
    /// Minimize the wedge energy and run the sign, energy, exponent, and
    /// second-variation probes.
    Saddle,
    /// Monotone iteration to the maximal state, with monotonicity and
    /// barrier-domination reports.
    Maximal,
    /// Annulus deviations of the maximal state from the one-dimensional
    /// layer along the cone.
    Asymptotics,
    /// Instability search over dilation/cutoff/profile test functions.
    Stability,
    /// Weighted Hardy Rayleigh minima and the dimension sign criterion.
    Hardy,
    /// Run every pipeline in order on one shared configuration.
    All,
}

impl Command {
    fn name(self) -> &'static str {
        match self {
            Command::Layer => "layer",
            Command::Saddle => "saddle",
            Command::Maximal => "maximal",
            Command::Asymptotics => "asymptotics",
            Command::Stability => "stability",
            Command::Hardy => "hardy",
            Command::All => "all",
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn run(cli: &Cli) -> CliResult<()> {
    let started = Instant::now();
    let config_path = cli
        .config
        .as_deref()
        .ok_or_else(|| CliError::Validation("missing required flag --config <FILE>".into()))?;
    if cli.threads == 0 {
        return Err(CliError::Validation("--threads must be at least 1".into()));
    }
    let config = Config::load(config_path)?;
    let resolver = Resolver::new(config);
    let mut runner = Runner::new(resolver, &cli.out, cli.seed)?;

    let order: &[Command] = match cli.command {
        Command::All => &[
            Command::Layer,
            Command::Saddle,
            Command::Maximal,
            Command::Asymptotics,
            Command::Stability,
            Command::Hardy,
        ],
        ref single => std::slice::from_ref(single),
    };

    let mut sections = serde_json::Map::new();
    for step in order {
        println!("[{}] running", step.name());
        let section = match step {
            Command::Layer => runner.run_layer()?,
            Command::Saddle => runner.run_saddle()?,
            Command::Maximal => runner.run_maximal()?,
            Command::Asymptotics => runner.run_asymptotics()?,
            Command::Stability => runner.run_stability()?,
            Command::Hardy => runner.run_hardy()?,
            Command::All => unreachable!("'all' expands to the concrete pipelines"),
        };
        sections.insert(step.name().to_string(), section);
    }

    let summary = json!({
        "tool": "saddle",
        "version": env!("CARGO_PKG_VERSION"),
        "subcommand": cli.command.name(),
        "config_path": runner.resolver.path(),
        "out_dir": cli.out.display().to_string(),
        "seed": cli.seed,
        "threads": cli.threads,
        "wall_time_seconds": format!("{:.3}", started.elapsed().as_secs_f64()),
        "resolved_config": runner.resolver.resolved_json(),
        "outputs": runner.outputs(),
        "sections": Value::Object(sections),
    });
    let path = cli.out.join("run_summary.json");
    let text = serde_json::to_string_pretty(&summary)
        .map_err(|e| CliError::Validation(format!("cannot serialize run summary: {e}")))?;
    std::fs::write(&path, text)
        .map_err(|e| CliError::Validation(format!("cannot write '{}': {e}", path.display())))?;
    println!("wrote {}", path.display());
    Ok(())
}
