//! `dockmend`: find and repair Dockerfile smells.

mod config;
mod inputs;
mod report;
mod run;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Parser, Debug)]
#[command(name = "dockmend", version, about = "Detect and repair Dockerfile smells")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Report smells without changing anything.
    Analyze(CommonArgs),
    /// Repair smells; prints a unified diff unless told otherwise.
    Repair(RepairArgs),
    /// List the available rules.
    Rules {
        #[arg(long, value_enum, default_value_t = Format::Text)]
        format: Format,
    },
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Text,
    Json,
}

#[derive(Args, Debug)]
pub struct CommonArgs {
    /// Files, directories or glob patterns. Directories are searched for
    /// files whose name contains "Dockerfile".
    #[arg(required = true)]
    paths: Vec<String>,
    /// Only run these rules (comma separated ids).
    #[arg(long, value_delimiter = ',')]
    rules: Vec<String>,
    /// Skip these rules (comma separated ids).
    #[arg(long, value_delimiter = ',')]
    exclude: Vec<String>,
    #[arg(long, value_enum)]
    format: Option<Format>,
    /// Configuration file (TOML).
    #[arg(long, env = "DOCKMEND_CONFIG")]
    config: Option<PathBuf>,
    /// Extra command schemas (TOML); same-named commands replace built-ins.
    #[arg(long)]
    schemas: Option<PathBuf>,
    /// Smell count from which the exit code becomes 1.
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    fail_threshold: Option<u64>,
    /// Worker threads (defaults to the number of CPUs).
    #[arg(long, short = 'j')]
    jobs: Option<usize>,
}

#[derive(Args, Debug)]
pub struct RepairArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Overwrite the files.
    #[arg(long, group = "write")]
    in_place: bool,
    /// Print a unified diff (the default).
    #[arg(long, group = "write")]
    diff: bool,
    /// Write one `.patch` file per changed file into this directory.
    #[arg(long, group = "write", value_name = "DIR")]
    patch_dir: Option<PathBuf>,
    /// Context lines in diffs.
    #[arg(long, default_value_t = 3)]
    context: usize,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Analyze(args) => run::analyze(&args),
        Command::Repair(args) => run::repair(&args),
        Command::Rules { format } => run::list_rules(format),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("dockmend: {e:#}");
            ExitCode::from(2)
        }
    }
}
