use std::path::PathBuf;
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::{Parser, Subcommand};

use ddsim::error::CliError;
use ddsim::{Command, RunOptions};

#[derive(Debug, Parser)]
#[command(name = "ddsim", version, about = "Double-donor charge-qubit simulator")]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Debug, Subcommand)]
enum Cmd {
    /// Run a config: single simulation, gate synthesis, STIRAP or sweep.
    Run {
        config: PathBuf,
        /// Sweep worker threads (default: available parallelism).
        #[arg(long)]
        jobs: Option<usize>,
        /// Output directory (overrides output.dir).
        #[arg(long)]
        out: Option<PathBuf>,
        /// RNG seed (overrides the config's seed).
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Check a config without running it.
    Validate { config: PathBuf },
    /// Exact propagation against the effective two-level model.
    Compare {
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
    },
}

fn fail(err: &CliError) -> ExitCode {
    eprintln!("{}", err.to_json());
    ExitCode::from(err.exit_code() as u8)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("DDSIM_LOG", "warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) => e.exit(),
        Err(e) => return fail(&CliError::Schema(e.to_string().trim().to_string())),
    };
    let result = match cli.command {
        Cmd::Run { config, jobs, out, seed } => {
            ddsim::run(Command::Run, &config, &RunOptions { out, seed, jobs }).map(|o| o.summary)
        }
        Cmd::Compare { config, out, seed } => {
            ddsim::run(Command::Compare, &config, &RunOptions { out, seed, jobs: None }).map(|o| o.summary)
        }
        Cmd::Validate { config } => ddsim::validate(&config),
    };
    match result {
        Ok(summary) => {
            println!("{}", serde_json::to_string_pretty(&summary).expect("json serializes"));
            ExitCode::SUCCESS
        }
        Err(e) => fail(&e),
    }
}
