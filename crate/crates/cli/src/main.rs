//! `multiscale`: one binary for every experiment.
//!
//! Each subcommand resolves its settings (flag, then config file, then
//! default), writes its artifacts into the output directory and finishes
//! with `manifest.json`. Exit codes: 0 ok, 2 configuration, 3 solver,
//! 4 precision budget.

/// `println!` that ignores a closed stdout.
macro_rules! say {
    ($($t:tt)*) => {{
        use std::io::Write;
        let _ = writeln!(std::io::stdout().lock(), $($t)*);
    }};
}

/// `print!` that ignores a closed stdout.
macro_rules! say_raw {
    ($($t:tt)*) => {{
        use std::io::Write;
        let _ = write!(std::io::stdout().lock(), $($t)*);
    }};
}

mod commands;
mod config;
mod error;
mod output;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use crate::config::{Emit, Settings};
use crate::error::CliError;
use crate::output::{Output, RunInfo};

#[derive(Debug, Parser)]
#[command(name = "multiscale", version, about = "Hierarchical multiscale decompositions and reconstructions")]
struct Cli {
    /// Flat `key = value` file; flags take precedence over its keys.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true)]
    out: Option<String>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads; outputs do not depend on this.
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Artifact kinds to write, e.g. `json,csv,pgm`.
    #[arg(long, global = true)]
    emit: Option<Emit>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Hierarchical TV decomposition of an image.
    DecomposeImage(commands::image::Args),
    /// Multiscale conductivity reconstruction from Neumann-to-Dirichlet data.
    ReconstructEit(commands::eit::Args),
    /// Registration of a periodic signal by circular shifts.
    RegisterShift(commands::shift::Args),
    /// Replays one of the counterexamples.
    RunCounterexample(commands::counterexample::Args),
    /// Classifies a schedule and prints its ratio sequences.
    CheckSchedule(commands::schedule::Args),
}

/// Settings shared by every subcommand.
pub struct Common {
    pub out: PathBuf,
    pub seed: u64,
    pub threads: usize,
    pub emit: Emit,
}

fn resolve_common(cli: &Cli, s: &mut Settings) -> Result<Common, CliError> {
    let default_threads = std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1);
    let out: String = s.get("out", cli.out.clone(), "out".to_string())?;
    let seed = s.get("seed", cli.seed, 0)?;
    let threads = s.get("threads", cli.threads, default_threads)?;
    if threads == 0 {
        return Err(CliError::config("threads must be at least 1"));
    }
    let emit = s.get("emit", cli.emit, Emit::default())?;
    Ok(Common {
        out: PathBuf::from(out),
        seed,
        threads,
        emit,
    })
}

fn run(cli: Cli) -> Result<(), CliError> {
    let mut settings = Settings::load(cli.config.as_deref())?;
    let common = resolve_common(&cli, &mut settings)?;
    let plan = match &cli.command {
        Command::DecomposeImage(a) => commands::Plan::Image(commands::image::resolve(a, &mut settings)?),
        Command::ReconstructEit(a) => commands::Plan::Eit(commands::eit::resolve(a, &mut settings)?),
        Command::RegisterShift(a) => commands::Plan::Shift(commands::shift::resolve(a, &mut settings)?),
        Command::RunCounterexample(a) => {
            commands::Plan::Counterexample(commands::counterexample::resolve(a, &mut settings)?)
        }
        Command::CheckSchedule(a) => commands::Plan::Schedule(commands::schedule::resolve(a, &mut settings)?),
    };
    settings.finish_keys()?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(common.threads)
        .build_global()
        .map_err(|e| CliError::config(format!("cannot start thread pool: {e}")))?;
    let mut out = Output::create(&common.out, common.emit)?;
    let mut info = RunInfo::default();
    let result = plan.execute(&common, &mut out, &mut info);
    let name = plan.name();
    out.finish(name, settings.resolved(), &info, result.as_ref().err())?;
    for w in &info.warnings {
        eprintln!("warning: {w}");
    }
    if result.is_ok() {
        say!("wrote {}", Path::new(&common.out).join("manifest.json").display());
    }
    result
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
