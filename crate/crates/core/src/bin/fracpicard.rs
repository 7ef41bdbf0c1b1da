use std::io;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use fracpicard::cli::{self, CliError, Config, RunOptions, EXIT_ERROR};

#[derive(Parser)]
#[command(name = "fracpicard", version, about = "Picard solver for multi-order Caputo fractional systems")]
struct Args {
    #[command(subcommand)]
    command: Command,
    /// Config file.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Directory for CSV and summary output.
    #[arg(long, global = true, default_value = ".")]
    out: PathBuf,
    /// Seed for the witness sampling.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
}

#[derive(Subcommand)]
enum Command {
    /// Gate the problem, solve it, write solution, trace and summary.
    Solve,
    /// Compute the contraction constants and locate n0.
    Contraction,
    /// Run the nonexistence or nonuniqueness demonstration.
    Boundary,
    /// Run the acceptance suite.
    Selftest,
}

fn run(args: &Args) -> Result<i32, CliError> {
    let opts = RunOptions { out_dir: args.out.clone(), seed: args.seed };
    let mut out = io::stdout().lock();
    let load = || -> Result<Config, CliError> {
        match &args.config {
            Some(p) => Config::load(p),
            None => Err(cli::ConfigError { line: None, msg: "--config is required".into() }.into()),
        }
    };
    match args.command {
        Command::Solve => cli::cmd_solve(&load()?, &opts, &mut out),
        Command::Contraction => cli::cmd_contraction(&load()?, &opts, &mut out),
        Command::Boundary => cli::cmd_boundary(&load()?, &opts, &mut out),
        Command::Selftest => cli::cmd_selftest(&mut out),
    }
}

fn main() -> ExitCode {
    // Usage errors exit 1; 2 is reserved for gate refusals.
    let args = match Args::try_parse() {
        Ok(a) => a,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { EXIT_ERROR as u8 } else { 0 });
        }
    };
    let code = match run(&args) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            EXIT_ERROR
        }
    };
    ExitCode::from(code as u8)
}
