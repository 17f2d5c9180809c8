//! `mreipi`: analyze IPI data as a randomness source, run the martingale
//! extractor, and test its output.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use mreipi_core::{Error, SynthKind};

mod commands;
mod output;

#[derive(Debug, Parser)]
#[command(name = "mreipi", version, about = "IPI randomness analysis and MRE-IPI extraction")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Entropy measures and SV delta of k-LSB datasets.
    Analyze(AnalyzeArgs),
    /// Run the martingale extractor and export its output.
    Extract(ExtractArgs),
    /// Run the internal statistical battery on an exported bitstream.
    Battery(BatteryArgs),
    /// Lag-1 scatter points of an exported bitstream.
    Scatter(ScatterArgs),
    /// Cross-subject dependency over random subject pairs.
    Pairdep(PairdepArgs),
    /// Write synthetic per-subject IPI files.
    Synth(SynthArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Json,
    Csv,
}

/// Where IPI series come from: files on disk or a synthetic model.
#[derive(Debug, Clone, Args, Serialize)]
pub struct SourceArgs {
    /// IPI file, or directory of IPI files (one subject per file).
    #[arg(long, conflicts_with = "synth")]
    pub input: Option<PathBuf>,
    /// Synthetic model: iid-uniform-bits, iid-histogram or ar1.
    #[arg(long, value_parser = parse_synth_kind)]
    pub synth: Option<SynthKind>,
    /// IPIs per synthetic subject.
    #[arg(long, default_value_t = 1_000_000)]
    pub count: usize,
    /// Number of synthetic subjects.
    #[arg(long, default_value_t = 1)]
    pub subjects: usize,
    /// Synthetic mean IPI, centiseconds.
    #[arg(long, default_value_t = 80.0)]
    pub mean: f64,
    /// AR(1) coefficient in [0, 1).
    #[arg(long = "ar", default_value_t = 0.0)]
    pub ar_coefficient: f64,
    /// Synthetic noise standard deviation, centiseconds.
    #[arg(long, default_value_t = 10.0)]
    pub noise_sd: f64,
}

fn parse_synth_kind(s: &str) -> Result<SynthKind, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct CommonArgs {
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Output directory.
    #[arg(long)]
    #[serde(skip)]
    pub out: PathBuf,
    /// Report formats to write.
    #[arg(long, value_delimiter = ',', default_value = "json,csv")]
    pub format: Vec<Format>,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct AnalyzeArgs {
    #[command(flatten)]
    pub source: SourceArgs,
    /// Bits per IPI; a comma-separated list runs several datasets.
    #[arg(long, value_delimiter = ',', default_value = "2")]
    pub k: Vec<u32>,
    #[arg(long, default_value_t = 16)]
    pub n_max: u32,
    #[command(flatten)]
    pub common: CommonArgs,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct ExtractArgs {
    #[command(flatten)]
    pub source: SourceArgs,
    #[arg(long, default_value_t = 2)]
    pub k: u32,
    #[arg(long, default_value_t = 3, allow_hyphen_values = true)]
    pub t_high: i32,
    #[arg(long, default_value_t = -3, allow_hyphen_values = true)]
    pub t_low: i32,
    /// Group-1 triads as comma-separated 3-bit strings.
    #[arg(long, value_delimiter = ',', default_value = "000,011,101,110")]
    pub group1: Vec<String>,
    #[command(flatten)]
    pub common: CommonArgs,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct BitsInput {
    /// Exported bitstream: ascii ('0'/'1') or packed bytes.
    #[arg(long)]
    pub input: PathBuf,
    /// True bit length of a packed input (defaults to 8 x file size).
    #[arg(long)]
    pub bit_len: Option<usize>,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct BatteryArgs {
    #[command(flatten)]
    pub bits: BitsInput,
    #[arg(long, default_value_t = 10_000)]
    pub seq_len: usize,
    /// Significance levels.
    #[arg(long, value_delimiter = ',', default_value = "0.10,0.05,0.01")]
    pub alpha: Vec<f64>,
    #[command(flatten)]
    pub common: CommonArgs,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct ScatterArgs {
    #[command(flatten)]
    pub bits: BitsInput,
    #[arg(long, default_value_t = 16)]
    pub word_size: u32,
    /// Also render scatter.svg.
    #[arg(long)]
    pub svg: bool,
    #[command(flatten)]
    pub common: CommonArgs,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct PairdepArgs {
    #[command(flatten)]
    pub source: SourceArgs,
    #[arg(long, default_value_t = 10_000)]
    pub trials: usize,
    #[arg(long, default_value_t = mreipi_core::dependency::DEFAULT_MIN_LENGTH)]
    pub min_length: usize,
    /// Word length for the dependency measure.
    #[arg(long, default_value_t = 8)]
    pub n: u32,
    #[command(flatten)]
    pub common: CommonArgs,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct SynthArgs {
    #[command(flatten)]
    pub source: SourceArgs,
    #[command(flatten)]
    pub common: CommonArgs,
}

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Io(String),
    Analysis(Error),
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError::Analysis(e)
    }
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) | CliError::Io(_) => 1,
            CliError::Analysis(e) if e.is_precondition() => 2,
            CliError::Analysis(_) => 1,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Usage(m) => write!(f, "usage: {m}"),
            CliError::Io(m) => write!(f, "io: {m}"),
            CliError::Analysis(e) => write!(f, "{e}"),
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    let result = match &cli.command {
        Command::Analyze(args) => commands::analyze(args),
        Command::Extract(args) => commands::extract(args),
        Command::Battery(args) => commands::battery(args),
        Command::Scatter(args) => commands::scatter(args),
        Command::Pairdep(args) => commands::pairdep(args),
        Command::Synth(args) => commands::synth(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("mreipi: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
