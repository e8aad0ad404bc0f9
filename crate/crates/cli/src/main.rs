//! `wvn`: band tables, critical points, density scans and invariant checks
//! for half-line periodic Schrodinger operators with a Wigner-von Neumann term.
//!
//! Exit codes: 0 success, 1 runtime failure (or a failed check), 2 configuration error.

mod commands;
mod config;
mod output;
mod pool;
mod verify;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use config::RunConfig;
use output::{emit, Format};

#[derive(Parser, Debug)]
#[command(name = "wvn", version, about = "Spectral density of periodic Schrodinger operators with a Wigner-von Neumann term")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// JSON run configuration.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output file (default: the config's `output.path`, else stdout).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    format: Option<FormatArg>,
    /// Worker threads for density scans (default: available cores).
    #[arg(long, global = true)]
    workers: Option<usize>,
    /// Seed for the randomized checks of `verify`.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
}

#[derive(Subcommand, Debug, Clone, Copy)]
enum Command {
    /// Band edges, widths and gaps.
    Bands,
    /// Critical points of each band.
    Critical,
    /// Spectral density on the configured grid.
    Density,
    /// Invariant checks of every layer; fails if any check fails.
    Verify,
}

#[derive(ValueEnum, Debug, Clone, Copy)]
enum FormatArg {
    Csv,
    Json,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let Some(path) = &cli.config else {
        eprintln!("config error in `--config`: a configuration file is required");
        return ExitCode::from(2);
    };
    let cfg = match RunConfig::load(path) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("{e}");
            return ExitCode::from(2);
        }
    };
    let format = match (cli.format, cfg.output.format.as_deref()) {
        (Some(FormatArg::Csv), _) | (None, None | Some("csv")) => Format::Csv,
        (Some(FormatArg::Json), _) | (None, Some("json")) => Format::Json,
        (None, Some(other)) => {
            eprintln!("config error in `output.format`: unknown format {other:?}");
            return ExitCode::from(2);
        }
    };
    let out = cli.out.as_ref().map(|p| p.to_string_lossy().into_owned()).or_else(|| cfg.output.path.clone());
    let workers = cli.workers.unwrap_or_else(pool::default_workers).max(1);

    let result = match cli.command {
        Command::Bands => commands::bands(&cfg).map(|t| (Some(t), true)),
        Command::Critical => commands::critical(&cfg).map(|t| (t, true)),
        Command::Density => commands::density(&cfg, workers).map(|t| (Some(t), true)),
        Command::Verify => verify::verify(&cfg, cli.seed).map(|(t, ok)| (Some(t), ok)),
    };
    match result {
        Ok((table, ok)) => {
            if let Some(t) = table {
                if let Err(e) = emit(&t.render(format), out.as_deref()) {
                    eprintln!("error: cannot write output: {e}");
                    return ExitCode::from(1);
                }
            }
            if ok {
                ExitCode::SUCCESS
            } else {
                eprintln!("verification failed");
                ExitCode::from(1)
            }
        }
        Err(e) => {
            eprintln!("error: {}", e.0);
            ExitCode::from(1)
        }
    }
}
