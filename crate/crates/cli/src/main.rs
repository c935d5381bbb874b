//! `gomimo` command-line driver.

mod commands;
mod config;
mod figures;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use config::ConfigBuilder;

/// Failure classes, each with its own exit status.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("runtime error: {0}")]
    Runtime(gomimo::Error),
    #[error("analysis error: {0}")]
    Analysis(String),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            Self::Config(_) => 2,
            Self::Runtime(_) => 3,
            Self::Analysis(_) => 4,
        }
    }
}

impl From<gomimo::Error> for CliError {
    fn from(e: gomimo::Error) -> Self {
        match e {
            gomimo::Error::Unbracketed { .. } => Self::Analysis(e.to_string()),
            gomimo::Error::InvalidParameter { .. } => Self::Config(e.to_string()),
            other => Self::Runtime(other),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        Self::Runtime(gomimo::Error::Io(e))
    }
}

#[derive(Debug, Parser)]
#[command(name = "gomimo", version, about = "Generalized optical MIMO detection experiments")]
pub struct Cli {
    /// TOML run configuration, layered over the presets.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Built-in preset applied before the config file; repeatable.
    #[arg(long, global = true)]
    preset: Vec<String>,
    /// `section.key=value` override applied last; repeatable.
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    overrides: Vec<String>,
    /// Worker threads for BER sweeps (results do not depend on it).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Subcommand)]
pub enum Command {
    /// Write the channel matrix as CSV (row = PD, column = LED).
    ChannelDump,
    /// Write the scheme's codebook as CSV.
    CodebookDump,
    /// Train the configured DNN detector and save the model file.
    Train,
    /// BER versus transmitted SNR for the configured detector.
    BerSweep,
    /// Per-epoch training and validation MSE for each training SNR.
    MseLog,
    /// Blind-detector BER versus the scaling factor α.
    AlphaSweep,
    /// Blind detector with input αFy versus αy.
    AblateInput,
    /// Detection wall time of all four detectors.
    Bench,
    /// Run the pipeline behind one of the figures (2–8).
    ReproduceFigure {
        #[arg(value_parser = clap::value_parser!(u8).range(2..=8))]
        figure: u8,
    },
}

impl Command {
    pub fn name(&self) -> String {
        match self {
            Self::ChannelDump => "channel-dump".into(),
            Self::CodebookDump => "codebook-dump".into(),
            Self::Train => "train".into(),
            Self::BerSweep => "ber-sweep".into(),
            Self::MseLog => "mse-log".into(),
            Self::AlphaSweep => "alpha-sweep".into(),
            Self::AblateInput => "ablate-input".into(),
            Self::Bench => "bench".into(),
            Self::ReproduceFigure { figure } => format!("reproduce-figure-{figure}"),
        }
    }
}

fn run(cli: &Cli) -> Result<(), CliError> {
    let mut builder = ConfigBuilder::default();
    for p in &cli.preset {
        builder.preset(p)?;
    }
    if let Some(path) = &cli.config {
        builder.file(path)?;
    }
    for s in &cli.overrides {
        builder.set(s)?;
    }
    let mut config = builder.build()?;
    if let Some(t) = cli.threads {
        if t == 0 {
            return Err(CliError::Config("--threads must be at least 1".into()));
        }
        config.threads = t;
    }
    commands::dispatch(&cli.command, config)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("gomimo: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
