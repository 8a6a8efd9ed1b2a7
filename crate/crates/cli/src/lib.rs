//! Command-line front end: `nhyang spectrum|chern|wilson|cqed`.
//!
//! Every command reads one TOML file and writes one file per output table into
//! the output directory. Each file carries the crate version, the command and the
//! resolved configuration. Exit codes: 0 success, 1 configuration or I/O error,
//! 2 usage error, 3 some points failed (listed on stderr and in file headers).

pub mod commands;
pub mod config;
pub mod table;

use clap::{Args, Parser, Subcommand, ValueEnum};
use config::{ConfigError, RunConfig};
use std::path::{Path, PathBuf};
use table::{render, Format, Metadata};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

pub const EXIT_OK: i32 = 0;
pub const EXIT_ERROR: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_PARTIAL: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "nhyang", version, about = "Non-Hermitian Yang monopole toolkit")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Band energies on Cartesian grids and along single-angle rotations.
    Spectrum(CommonArgs),
    /// Second Chern number versus radius.
    Chern(CommonArgs),
    /// Wilson loops, Moebius loops and transported expectation values.
    Wilson(CommonArgs),
    /// Circuit-QED mapping, trajectories, eigenstate fits and the protocol.
    Cqed(CommonArgs),
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Spectrum(_) => "spectrum",
            Command::Chern(_) => "chern",
            Command::Wilson(_) => "wilson",
            Command::Cqed(_) => "cqed",
        }
    }

    pub fn args(&self) -> &CommonArgs {
        match self {
            Command::Spectrum(a) | Command::Chern(a) | Command::Wilson(a) | Command::Cqed(a) => a,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum FormatArg {
    Csv,
    Json,
}

impl From<FormatArg> for Format {
    fn from(f: FormatArg) -> Self {
        match f {
            FormatArg::Csv => Format::Csv,
            FormatArg::Json => Format::Json,
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct CommonArgs {
    /// TOML configuration file.
    #[arg(long)]
    pub config: PathBuf,
    /// Output directory, created if missing.
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
    #[arg(long, value_enum, default_value_t = FormatArg::Csv)]
    pub format: FormatArg,
    /// Worker threads; defaults to the number of CPUs.
    #[arg(long)]
    pub threads: Option<usize>,
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Config(#[from] ConfigError),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{0}")]
    Run(String),
}

/// What a successful run wrote.
#[derive(Debug)]
pub struct RunSummary {
    pub files: Vec<PathBuf>,
    pub warnings: Vec<String>,
    pub failures: Vec<String>,
}

impl RunSummary {
    pub fn exit_code(&self) -> i32 {
        if self.failures.is_empty() {
            EXIT_OK
        } else {
            EXIT_PARTIAL
        }
    }
}

/// Runs one command with a parsed configuration and writes its tables.
pub fn run_with_config(command: &str, cfg: &RunConfig, args: &CommonArgs) -> Result<RunSummary, CliError> {
    let section = cfg.section_only(command);
    let config_toml = toml::to_string(&section).map_err(|e| CliError::Run(e.to_string()))?;
    let config_json = serde_json::to_value(&section).map_err(|e| CliError::Run(e.to_string()))?;

    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = args.threads {
        if n == 0 {
            return Err(CliError::Run("--threads must be >= 1".into()));
        }
        builder = builder.num_threads(n);
    }
    let pool = builder.build().map_err(|e| CliError::Run(e.to_string()))?;
    let output = pool.install(|| commands::execute(command, cfg)).map_err(CliError::Run)?;

    let meta = Metadata {
        version: VERSION.to_string(),
        command: command.to_string(),
        config_toml,
        config: config_json,
        warnings: output.warnings.clone(),
        failures: output.failures.clone(),
    };
    std::fs::create_dir_all(&args.out).map_err(|source| CliError::Io { path: args.out.clone(), source })?;
    let format = Format::from(args.format);
    let mut files = Vec::with_capacity(output.tables.len());
    for table in &output.tables {
        let path = args.out.join(format!("{}.{}", table.name, format.extension()));
        write(&path, &render(table, &meta, format))?;
        files.push(path);
    }
    Ok(RunSummary { files, warnings: output.warnings, failures: output.failures })
}

fn write(path: &Path, text: &str) -> Result<(), CliError> {
    std::fs::write(path, text).map_err(|source| CliError::Io { path: path.to_path_buf(), source })
}

pub fn run(cli: &Cli) -> Result<RunSummary, CliError> {
    let args = cli.command.args();
    let cfg = RunConfig::load(&args.config)?;
    run_with_config(cli.command.name(), &cfg, args)
}
