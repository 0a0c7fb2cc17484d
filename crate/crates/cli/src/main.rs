//! `replan`: offline planning, episode replay and benchmark runs.

mod commands;
mod error;
mod manifest;
mod plot;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

#[derive(Parser, Debug)]
#[command(name = "replan", version, about = "Human-aware path replanning for manipulators")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Plan one path offline and write it as JSON.
    Plan(PlanArgs),
    /// Run one episode and write its per-tick trace.
    Replay(ReplayArgs),
    /// Run strategies over scenarios, speed fractions and seeds.
    Bench(BenchArgs),
    /// Run strategies over the 16 bundled SSM parameter sets.
    Sweep(SweepArgs),
    /// Check scenario files without running anything.
    Validate(ValidateArgs),
}

#[derive(Args, Debug, Clone)]
pub struct OutArg {
    /// Output directory.
    #[arg(long, env = "REPLAN_OUT_DIR", default_value = "replan-out")]
    pub out: PathBuf,
}

/// Execution settings shared by episode-running commands.
#[derive(Args, Debug, Clone)]
pub struct ExecArgs {
    /// Loop rates in Hz as execution,check,replan.
    #[arg(long, default_value = "500,25,5")]
    pub rates: String,
    /// Replanning budget per call, ms.
    #[arg(long, default_value_t = 200.0)]
    pub budget_ms: f64,
    /// Count the replanning budget in wall time instead of work units.
    /// Results then depend on the machine.
    #[arg(long)]
    pub wall_clock: bool,
}

#[derive(Args, Debug)]
pub struct PlanArgs {
    /// Bundled scenario name or scenario file.
    #[arg(long)]
    pub scenario: String,
    /// Cost model: length, weighted, hamp or marsha.
    #[arg(long, default_value = "weighted")]
    pub cost: String,
    /// Planner iterations.
    #[arg(long, default_value_t = 3000)]
    pub iterations: usize,
    /// Planner seed; defaults to the scenario's planning seed.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Optional wall-clock cap on planning, ms.
    #[arg(long)]
    pub budget_ms: Option<f64>,
    #[command(flatten)]
    pub out: OutArg,
}

#[derive(Args, Debug)]
pub struct ReplayArgs {
    #[arg(long)]
    pub scenario: String,
    #[arg(long, default_value = "MARSHA")]
    pub strategy: String,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 1.0)]
    pub speed_fraction: f64,
    /// Use bundled SSM set 1–16 instead of the scenario's parameters.
    #[arg(long)]
    pub ssm_set: Option<usize>,
    #[command(flatten)]
    pub exec: ExecArgs,
    #[command(flatten)]
    pub out: OutArg,
}

#[derive(Args, Debug)]
pub struct BenchArgs {
    /// Suite file; replaces --scenario, --strategy and --speed-fraction.
    #[arg(long, conflicts_with_all = ["scenario", "strategy", "speed_fraction"])]
    pub suite: Option<PathBuf>,
    /// Bundled scenario names or scenario files.
    #[arg(long, value_delimiter = ',')]
    pub scenario: Vec<String>,
    #[arg(long, value_delimiter = ',')]
    pub strategy: Vec<String>,
    #[arg(long, value_delimiter = ',')]
    pub speed_fraction: Vec<f64>,
    /// Repetitions per configuration [default: 20].
    #[arg(long)]
    pub reps: Option<usize>,
    /// First seed; repetitions use consecutive seeds [default: 0].
    #[arg(long)]
    pub seed: Option<u64>,
    /// Episodes run concurrently [default: available cores].
    #[arg(long)]
    pub parallel: Option<usize>,
    #[command(flatten)]
    pub exec: ExecArgs,
    #[command(flatten)]
    pub out: OutArg,
}

#[derive(Args, Debug)]
pub struct SweepArgs {
    #[arg(long, default_value = "medium")]
    pub scenario: String,
    #[arg(long, value_delimiter = ',', default_value = "dSSM,MARS,MARSHA")]
    pub strategy: Vec<String>,
    #[arg(long, default_value_t = 1.0)]
    pub speed_fraction: f64,
    #[arg(long, default_value_t = 20)]
    pub reps: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub parallel: Option<usize>,
    #[command(flatten)]
    pub exec: ExecArgs,
    #[command(flatten)]
    pub out: OutArg,
}

#[derive(Args, Debug)]
pub struct ValidateArgs {
    #[arg(long, value_delimiter = ',', required = true)]
    pub scenario: Vec<String>,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match commands::run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
