//! `rackpinion` command-line front end.
//!
//! `rackpinion <mode> <config.json> [--set key=value]... [--output path]
//! [--format csv|json] [--workers n]`. Exit status is 0 on success, 1 for
//! configuration errors and 2 for numerical or I/O failures.

pub mod config;
mod modes;

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use clap::error::ErrorKind;
use clap::Parser;
use rackpinion_core::Error;
use thiserror::Error;

use config::{Mode, RunConfig};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error("i/o error: {0}")]
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 1,
            CliError::Numerical(_) | CliError::Io(_) => 2,
        }
    }

    pub(crate) fn from_core(e: Error) -> Self {
        match e {
            Error::Io(_) | Error::Format(_) => CliError::Io(e.to_string()),
            e if e.is_numerical() => CliError::Numerical(e.to_string()),
            e => CliError::Config(e.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "rackpinion",
    version,
    about = "Rack-and-pinion dynamics driven by the lateral Casimir force"
)]
struct Args {
    /// simulate | classify | basin | drive-map | lyapunov | critical-load | force
    #[arg(value_parser = parse_mode)]
    mode: Mode,
    /// JSON run configuration.
    config: PathBuf,
    /// Override a config key, e.g. `--set reduced.load=0.19` or `--set numerics.steps_per_period=200`.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
    /// Output file (overrides `output.path`).
    #[arg(short, long)]
    output: Option<PathBuf>,
    /// Output format, csv or json (overrides `output.format`).
    #[arg(long)]
    format: Option<String>,
    /// Worker threads for sweeps (overrides `workers` and RACKPINION_WORKERS).
    #[arg(long)]
    workers: Option<usize>,
}

fn parse_mode(s: &str) -> Result<Mode, String> {
    Mode::parse(s).ok_or_else(|| {
        let names: Vec<&str> = Mode::ALL.iter().map(|m| m.name()).collect();
        format!("unknown mode `{s}`; expected one of {}", names.join(", "))
    })
}

/// Runs the CLI on `argv` (including the program name) and returns the exit code.
pub fn run<I, T>(argv: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let args = match Args::try_parse_from(argv) {
        Ok(a) => a,
        Err(e) => {
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = write!(out, "{}", e.render());
                    0
                }
                _ => {
                    let _ = write!(err, "{}", e.render());
                    1
                }
            };
        }
    };
    match execute(&args, out, err) {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            e.exit_code()
        }
    }
}

fn execute(args: &Args, out: &mut dyn Write, err: &mut dyn Write) -> Result<(), CliError> {
    let mut overrides = args.set.clone();
    if let Some(p) = &args.output {
        overrides.push(format!(
            "output.path={}",
            serde_json::to_string(p).expect("path")
        ));
    }
    if let Some(f) = &args.format {
        overrides.push(format!("output.format={f}"));
    }
    if let Some(w) = args.workers {
        overrides.push(format!("workers={w}"));
    }
    let mut cfg = RunConfig::load(&args.config, &overrides)?;
    match cfg.mode {
        Some(m) if m != args.mode => {
            return Err(CliError::Config(format!(
                "`mode` is `{}` in the config but `{}` on the command line",
                m.name(),
                args.mode.name()
            )))
        }
        _ => cfg.mode = Some(args.mode),
    }
    if cfg.workers == Some(0) {
        return Err(CliError::Config("`workers` must be >= 1".into()));
    }
    log::debug!("resolved config: {cfg:?}");
    modes::dispatch(&cfg, out, err)
}
