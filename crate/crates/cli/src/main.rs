//! `bootperc`: runs one configured experiment and writes CSV tables plus a
//! `meta.json` sidecar into the output directory.
//!
//! Exit codes: 0 success, 2 configuration or input error, 3 capacity exceeded,
//! 4 internal invariant violation (reproduction material under `archive/`),
//! 1 I/O failure.

mod commands;
mod config;
mod output;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::Parser;

use config::{Command, ExperimentConfig, Overrides};
use output::Output;

#[derive(Debug, Parser)]
#[command(name = "bootperc", version, about = "Bootstrap percolation experiments")]
struct Cli {
    /// TOML experiment file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory (default: `results`).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Master seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads (default: all cores).
    #[arg(long)]
    threads: Option<usize>,
    /// Trials per cell.
    #[arg(long)]
    trials: Option<usize>,
    /// Command, when no config file is given or to override its `command`.
    #[arg(value_enum)]
    command: Option<CliCommand>,
}

#[derive(Debug, Clone, Copy, clap::ValueEnum)]
enum CliCommand {
    Simulate,
    Sweep,
    Eta,
    Pc,
    Certify,
    Audit,
    Oracle,
    Path,
    Bounds,
}

impl From<CliCommand> for Command {
    fn from(c: CliCommand) -> Self {
        match c {
            CliCommand::Simulate => Command::Simulate,
            CliCommand::Sweep => Command::Sweep,
            CliCommand::Eta => Command::Eta,
            CliCommand::Pc => Command::Pc,
            CliCommand::Certify => Command::Certify,
            CliCommand::Audit => Command::Audit,
            CliCommand::Oracle => Command::Oracle,
            CliCommand::Path => Command::Path,
            CliCommand::Bounds => Command::Bounds,
        }
    }
}

#[derive(Debug)]
pub enum RunError {
    Config(String),
    Capacity(String),
    Internal(String),
    Io(String),
}

impl RunError {
    pub fn io(path: &Path, e: std::io::Error) -> Self {
        RunError::Io(format!("{}: {e}", path.display()))
    }

    pub fn csv(path: &Path, e: csv::Error) -> Self {
        RunError::Io(format!("{}: {e}", path.display()))
    }

    fn exit_code(&self) -> u8 {
        match self {
            RunError::Io(_) => 1,
            RunError::Config(_) => 2,
            RunError::Capacity(_) => 3,
            RunError::Internal(_) => 4,
        }
    }
}

impl std::fmt::Display for RunError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            RunError::Config(m) => write!(f, "config error: {m}"),
            RunError::Capacity(m) => write!(f, "capacity exceeded: {m}"),
            RunError::Internal(m) => write!(f, "internal invariant violated: {m}"),
            RunError::Io(m) => write!(f, "i/o error: {m}"),
        }
    }
}

impl From<bootperc::Error> for RunError {
    fn from(e: bootperc::Error) -> Self {
        match e {
            bootperc::Error::Input(m) => RunError::Config(m),
            bootperc::Error::Capacity(m) => RunError::Capacity(m),
            bootperc::Error::Internal(m) => RunError::Internal(m),
        }
    }
}

impl From<config::ConfigError> for RunError {
    fn from(e: config::ConfigError) -> Self {
        RunError::Config(e.0)
    }
}

fn resolve(cli: &Cli) -> Result<ExperimentConfig, RunError> {
    let mut cfg = match (&cli.config, cli.command) {
        (Some(path), _) => ExperimentConfig::load(path)?,
        (None, Some(_)) => ExperimentConfig::from_toml("command = \"bounds\"")?,
        (None, None) => return Err(RunError::Config("give --config or a command".into())),
    };
    if let Some(c) = cli.command {
        cfg.command = c.into();
    }
    cfg.apply(&Overrides {
        seed: cli.seed,
        trials: cli.trials,
        out: cli.out.clone(),
    });
    cfg.validate()?;
    Ok(cfg)
}

fn execute(cli: &Cli) -> Result<(), RunError> {
    let cfg = resolve(cli)?;
    if let Some(threads) = cli.threads {
        if threads == 0 {
            return Err(RunError::Config("--threads must be at least 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global()
            .map_err(|e| RunError::Config(e.to_string()))?;
    }
    let dir = cfg.out.clone().unwrap_or_else(|| PathBuf::from("results"));
    let mut out = Output::create(&dir)?;
    let result = commands::run(&cfg, &mut out);
    let meta = serde_json::json!({
        "tool": "bootperc",
        "version": env!("CARGO_PKG_VERSION"),
        "timestamp": humantime::format_rfc3339_seconds(std::time::SystemTime::now()).to_string(),
        "master_seed": cfg.master_seed,
        "threads": rayon::current_num_threads(),
        "status": match &result {
            Ok(()) => "ok".to_string(),
            Err(e) => e.to_string(),
        },
        "config": cfg,
        "files": out.rows,
    });
    out.json("meta.json", &meta)?;
    result
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("bootperc: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
