use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use vortex_uca::cli::{self, CliError, Experiment};

/// Simulate OAM links between parallel, non-coaxial uniform circular arrays.
#[derive(Debug, Parser)]
#[command(name = "vortex-uca", version)]
struct Args {
    #[command(subcommand)]
    command: Command,

    /// Configuration file ([geometry], [budget], [sweep] tables).
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,

    /// Output CSV path; stdout when omitted.
    #[arg(long, global = true, value_name = "PATH")]
    out: Option<PathBuf>,

    /// RNG seed, overriding the config (at most 2^63 - 1, the TOML integer range).
    #[arg(long, global = true, value_name = "U64", value_parser = clap::value_parser!(u64).range(..=i64::MAX as u64))]
    seed: Option<u64>,

    /// Sweep grid override.
    #[arg(long, global = true, value_name = "START:STOP:STEPS")]
    grid: Option<String>,
}

#[derive(Debug, Clone, Copy, Subcommand)]
enum Command {
    /// Closed-form vs direct-sum error against the number of elements.
    ErrorSweep,
    /// Mode gain magnitudes against the tilt phi.
    GainVsPhi,
    /// Mode gain magnitudes against the bearing theta.
    GainVsTheta,
    /// Spectrum efficiency against the tilt phi.
    SeVsPhi,
    /// Synthesize, propagate and demultiplex random symbols.
    DemuxDemo,
}

impl From<Command> for Experiment {
    fn from(c: Command) -> Self {
        match c {
            Command::ErrorSweep => Experiment::ErrorSweep,
            Command::GainVsPhi => Experiment::GainVsPhi,
            Command::GainVsTheta => Experiment::GainVsTheta,
            Command::SeVsPhi => Experiment::SeVsPhi,
            Command::DemuxDemo => Experiment::DemuxDemo,
        }
    }
}

fn configure_threads() -> Result<(), CliError> {
    let Ok(value) = std::env::var("VORTEX_UCA_THREADS") else {
        return Ok(());
    };
    let threads: usize = value
        .trim()
        .parse()
        .ok()
        .filter(|n| *n > 0)
        .ok_or_else(|| {
            CliError::Usage(format!(
                "VORTEX_UCA_THREADS must be a positive integer, got `{value}`"
            ))
        })?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global()
        .map_err(|e| CliError::Usage(format!("cannot size thread pool: {e}")))
}

fn execute(args: Args) -> Result<(), CliError> {
    configure_threads()?;
    let experiment = Experiment::from(args.command);
    let text = match &args.config {
        Some(path) => std::fs::read_to_string(path)
            .map_err(|e| std::io::Error::new(e.kind(), format!("{}: {e}", path.display())))?,
        None => String::new(),
    };
    let grid = args.grid.as_deref().map(cli::parse_grid).transpose()?;
    let loaded = cli::load_for(experiment, &text, args.seed, grid)?;
    let (csv, report) = cli::run(experiment, &loaded)?;
    if let Some(report) = report {
        eprint!("{report}");
    }
    match &args.out {
        Some(path) => std::fs::write(path, csv)
            .map_err(|e| std::io::Error::new(e.kind(), format!("{}: {e}", path.display())))?,
        None => print!("{csv}"),
    }
    Ok(())
}

fn main() -> ExitCode {
    match execute(Args::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
