//! `pput`: battery profitability analyses over hourly market data.
//!
//! Every run is driven by one TOML config; command-line flags only override
//! config keys. Exit codes: 0 success, 1 usage or config error, 2 data
//! validation failure, 3 analysis error.

pub mod commands;
pub mod config;
pub mod data;
pub mod output;

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use log::error;

use commands::{data as data_failure, usage, CmdResult, FailureKind};
use config::RunConfig;
use data::DataSet;
use output::{Metadata, Writer};

#[derive(Debug, Parser)]
#[command(name = "pput", version, about = "Potentially profitable utilization time of grid batteries")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct Common {
    /// Run configuration (TOML).
    #[arg(long)]
    config: PathBuf,
    /// Output directory; overrides `output_dir`.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Wear-cost grid `start:stop:step` in EUR/MWh; overrides `sweep.wear_grid`.
    #[arg(long = "wear-grid")]
    wear_grid: Option<String>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Check every dataset: schema, caps, calendar coverage.
    Validate(Common),
    /// Download datasets declared with `fetch` into the cache.
    Fetch(Common),
    /// Daily arbitrage, day-ahead only and with ancillary services.
    Arbitrage(Common),
    /// Secondary-reserve break-even band prices.
    Reserve(Common),
    /// Utilization curves over the wear-cost grid.
    Sweep(Common),
    /// Everything configured, bundled in one output tree.
    Report(Common),
}

impl Command {
    fn common(&self) -> &Common {
        match self {
            Command::Validate(c)
            | Command::Fetch(c)
            | Command::Arbitrage(c)
            | Command::Reserve(c)
            | Command::Sweep(c)
            | Command::Report(c) => c,
        }
    }
}

/// Parses `args` (program name first), runs the command and returns the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { FailureKind::Usage as i32 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match execute(&cli.command) {
        Ok(()) => 0,
        Err(f) => {
            error!("{f}");
            eprintln!("error: {f}");
            f.kind as i32
        }
    }
}

fn execute(command: &Command) -> CmdResult {
    let common = command.common();
    let config = RunConfig::load(&common.config, common.wear_grid.as_deref()).map_err(usage)?;
    let out_dir = common.out.clone().unwrap_or_else(|| config.output_dir.clone());
    let mut meta = Metadata::new(&config.text, common.wear_grid.as_deref());

    if let Command::Fetch(_) = command {
        return commands::fetch(&config);
    }
    if let Command::Validate(_) = command {
        let mut out = Writer::new(&out_dir, &meta);
        return match commands::validate(&config, &mut out)? {
            true => Ok(()),
            false => Err(data_failure(anyhow::anyhow!("one or more datasets failed validation"))),
        };
    }

    let ds = DataSet::load(&config).map_err(data_failure)?;
    meta.datasets = ds.fingerprints.clone();
    let mut out = Writer::new(&out_dir, &meta);
    match command {
        Command::Arbitrage(_) => commands::arbitrage(&config, &ds, &mut out),
        Command::Reserve(_) => commands::reserve(&config, &ds, &mut out),
        Command::Sweep(_) => commands::sweep(&config, &ds, &mut out),
        Command::Report(_) => report(&config, &ds, &mut out),
        Command::Validate(_) | Command::Fetch(_) => unreachable!("handled above"),
    }
}

fn report(config: &RunConfig, ds: &DataSet, out: &mut Writer) -> CmdResult {
    if !commands::validate(config, out)? {
        return Err(data_failure(anyhow::anyhow!("one or more datasets failed validation")));
    }
    commands::stats(config, ds, out)?;
    if config.arbitrage.is_some() {
        commands::arbitrage(config, ds, out)?;
    }
    if config.reserve.is_some() {
        commands::reserve(config, ds, out)?;
    }
    if config.sweep.is_some() {
        commands::sweep(config, ds, out)?;
    }
    commands::manifest(out)
}
