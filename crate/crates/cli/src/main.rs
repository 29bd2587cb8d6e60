//! `permsym`: permutation symmetry tools for small feedforward networks.
//!
//! Exit codes: 0 success, 1 invalid input or domain error, 2 a violated
//! internal invariant (including a failed `verify` suite).

mod commands;
mod config;
mod error;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use commands::*;
use error::CliError;
use output::{read_file, Sink};

#[derive(Debug, Parser)]
#[command(
    name = "permsym",
    version,
    about = "Permutation symmetry, canonical forms and covering bounds for feedforward networks"
)]
struct Cli {
    /// JSON file with settings for the subcommand; flags take precedence.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Write reports here instead of stdout.
    #[arg(long, global = true, env = "PERMSYM_OUT_DIR")]
    out_dir: Option<PathBuf>,
    /// Worker threads; results do not depend on it.
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    Transform(TransformArgs),
    Canonicalize(CanonicalizeArgs),
    CheckEquiv(CheckEquivArgs),
    Bounds(BoundsArgs),
    /// Metric entropies of the compared bounds over a sweep.
    EntropyCompare(BoundsArgs),
    CoveringSweep(CoveringArgs),
    Basin(BasinArgs),
    Verify(VerifyArgs),
}

fn run(cli: Cli) -> Result<(), CliError> {
    if let Some(n) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Usage(e.to_string()))?;
    }
    let file = match &cli.config {
        Some(path) => Some(serde_json::from_str::<serde_json::Value>(&read_file(
            &path.display().to_string(),
        )?)?),
        None => None,
    };
    let ctx = Context {
        file: file.as_ref(),
        sink: Sink {
            out_dir: cli.out_dir,
        },
    };
    match &cli.command {
        Command::Transform(a) => transform(&ctx, a),
        Command::Canonicalize(a) => canonicalize_cmd(&ctx, a),
        Command::CheckEquiv(a) => check_equiv(&ctx, a),
        Command::Bounds(a) => bounds(&ctx, a),
        Command::EntropyCompare(a) => entropy_compare(&ctx, a),
        Command::CoveringSweep(a) => covering(&ctx, a),
        Command::Basin(a) => basin(&ctx, a),
        Command::Verify(a) => verify(&ctx, a),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match std::panic::catch_unwind(|| run(cli)) {
        Ok(Ok(())) => ExitCode::SUCCESS,
        Ok(Err(e)) => {
            eprintln!("{e}");
            ExitCode::from(e.exit_code() as u8)
        }
        Err(_) => ExitCode::from(2),
    }
}
