//! `qtruss`: truss sizing through symbolic FEM, QUBO processing and annealing.

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};

use qtruss_core::pipeline::PipelineParams;
use qtruss_core::solvers::SamplerParams;
use qtruss_core::symfem::ObjectiveKind;

use config::RunConfig;

#[derive(Debug, Parser)]
#[command(name = "qtruss", version, about = "Discrete truss sizing as QUBO, solved by Dinkelbach iteration")]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Builtin problem (two_truss, three_truss, four_truss) or a problem JSON file.
    #[arg(long, global = true, default_value = "two_truss")]
    problem: String,

    /// Objective formulation.
    #[arg(long, global = true, default_value = "fractional")]
    objective: ObjectiveKind,

    /// Base seed; trial and iteration seeds are derived from it.
    #[arg(long, global = true, env = "QTRUSS_SEED", default_value_t = 0)]
    seed: u64,

    /// Annealing reads per sampler call.
    #[arg(long, global = true)]
    reads: Option<usize>,

    /// Independent seeded trials for `solve`.
    #[arg(long, global = true, default_value_t = 1)]
    repeat: usize,

    /// Directory for output files; stdout when absent.
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// JSON file overriding the benchmark parameter defaults.
    #[arg(long, global = true)]
    params: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Exhaustive search over valid solutions.
    Brute,
    /// Objective value of every valid solution, as CSV.
    Landscape,
    /// Dinkelbach iteration with the annealer (direct minimization for `flawed`).
    Solve,
    /// Processed QUBO of one iteration as interchange JSON.
    ExportQubo {
        /// Dinkelbach parameter of the exported step.
        #[arg(long, allow_negative_numbers = true)]
        lambda: Option<f64>,
    },
}

/// Failure classes, each with its own exit code.
#[derive(Debug)]
pub enum Failure {
    /// No valid or converged result from the solve itself.
    Solve(anyhow::Error),
    /// Bad flags, problem files or parameter files.
    Usage(anyhow::Error),
    Internal(anyhow::Error),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Solve(_) => 1,
            Failure::Usage(_) => 2,
            Failure::Internal(_) => 3,
        }
    }

    fn error(&self) -> &anyhow::Error {
        match self {
            Failure::Solve(e) | Failure::Usage(e) | Failure::Internal(e) => e,
        }
    }
}

impl From<anyhow::Error> for Failure {
    fn from(e: anyhow::Error) -> Self {
        Failure::Internal(e)
    }
}

fn build_config(cli: &Cli) -> Result<RunConfig> {
    let (name, problem) = config::resolve_problem(&cli.problem)?;
    let mut pipeline = PipelineParams::for_problem(&problem);
    let mut sampler = SamplerParams { seed: cli.seed, ..SamplerParams::default() };
    if let Some(path) = &cli.params {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        config::apply_overrides(&mut pipeline, &mut sampler, &text)?;
    }
    if let Some(reads) = cli.reads {
        sampler.num_reads = reads;
    }
    sampler.seed = cli.seed;
    pipeline.validate()?;
    sampler.validate()?;
    anyhow::ensure!(cli.repeat >= 1, "--repeat must be at least 1");
    Ok(RunConfig { name, problem, objective: cli.objective, pipeline, sampler, repeat: cli.repeat, out: cli.out.clone() })
}

fn run(cli: Cli) -> Result<(), Failure> {
    let cfg = build_config(&cli).map_err(Failure::Usage)?;
    match cli.command {
        Command::Brute => commands::brute(&cfg),
        Command::Landscape => commands::landscape(&cfg),
        Command::Solve => commands::solve(&cfg),
        Command::ExportQubo { lambda } => commands::export_qubo(&cfg, lambda),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {:#}", f.error());
            ExitCode::from(f.code())
        }
    }
}
