use clap::{Args, Parser, Subcommand};
use relgs_cli::{parse_config_for, run, Experiment, Status};
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "relgs", version, about = "Ground states of pseudo-relativistic fractional Schrödinger equations")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Compute one ground state
    Solve(Common),
    /// Follow the ground state as m decreases, then solve at m = 0
    Continuation(Common),
    /// Solve over a list of values of one parameter
    Sweep(Common),
    /// Check the extension identities mode by mode
    VerifyExtension(Common),
    /// Compare spectral and kernel forms of the operator
    VerifyKernel(Common),
    /// Print the uniform upper bound on the ground-state level
    Bounds(Common),
}

#[derive(Args)]
struct Common {
    #[arg(long)]
    config: PathBuf,
    /// Overrides output_dir
    #[arg(long)]
    output: Option<PathBuf>,
    /// Overrides seed
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads for independent jobs
    #[arg(long, default_value_t = 0)]
    jobs: usize,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let (experiment, common) = match cli.command {
        Command::Solve(c) => (Experiment::Solve, c),
        Command::Continuation(c) => (Experiment::Continuation, c),
        Command::Sweep(c) => (Experiment::Sweep, c),
        Command::VerifyExtension(c) => (Experiment::VerifyExtension, c),
        Command::VerifyKernel(c) => (Experiment::VerifyKernel, c),
        Command::Bounds(c) => (Experiment::Bounds, c),
    };
    let text = match std::fs::read_to_string(&common.config) {
        Ok(t) => t,
        Err(err) => {
            eprintln!("error: cannot read {}: {err}", common.config.display());
            return ExitCode::from(Status::ConfigError.code() as u8);
        }
    };
    let mut config = match parse_config_for(&text, Some(experiment)) {
        Ok(c) => c,
        Err(err) => {
            eprintln!("error: {err}");
            return ExitCode::from(Status::ConfigError.code() as u8);
        }
    };
    if let Some(dir) = common.output {
        config.output_dir = dir;
    }
    if let Some(seed) = common.seed {
        config.seed = seed;
        config.solver.seed = seed;
    }
    config.jobs = common.jobs;
    ExitCode::from(run(&config).code() as u8)
}
