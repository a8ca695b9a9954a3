//! Command-line front end for learning and checking Hamiltonian flow maps.
//!
//! Exit codes: 0 success, 1 runtime failure, 2 usage error, 3 verification
//! threshold violation.

mod common;
mod config;
mod exp;
mod generate;
mod manifest;
mod rollout;
mod train;
mod verify_cmd;

use std::path::PathBuf;

use clap::{Parser, Subcommand};

#[derive(Parser, Debug)]
#[command(
    name = "sympflow",
    version,
    about = "Learn Hamiltonian flow maps with symplectic networks"
)]
struct Cli {
    /// JSON config file; any long flag can be given as a kebab-case key.
    /// Explicit flags win over config values.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand, Debug)]
enum Cmd {
    /// Sample flow-map training data from a built-in system.
    Generate(generate::GenerateArgs),
    /// Train a symplectic network or a dense baseline on a dataset.
    Train(train::TrainArgs),
    /// Iterate a trained map and write the trajectory as CSV.
    Rollout(rollout::RolloutArgs),
    /// Check symplecticity, gradients, or long-run energy drift.
    Verify(verify_cmd::VerifyArgs),
    /// Run a full generate/train/rollout/verify pipeline from a preset.
    Exp(exp::ExpArgs),
}

fn main() {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        // clap exits 2 on usage errors and 0 for --help/--version.
        Err(e) => e.exit(),
    };
    let config = cli.config.as_deref();
    let result = match cli.cmd {
        Cmd::Generate(args) => generate::run(args, config),
        Cmd::Train(args) => train::run(args, config),
        Cmd::Rollout(args) => rollout::run(args, config),
        Cmd::Verify(args) => verify_cmd::run(args, config),
        Cmd::Exp(args) => exp::run(args, config),
    };
    if let Err(fail) = result {
        eprintln!("error: {fail}");
        std::process::exit(fail.code);
    }
}
