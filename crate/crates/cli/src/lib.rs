//! Command-line front end: `constat check | sample | verify | reduce`.
//!
//! [`run`] parses arguments, executes one subcommand and returns the process
//! exit code, writing normal output to `out` and diagnostics to `err`.

mod commands;
pub mod descriptor;
pub mod report;

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

pub use descriptor::{Descriptor, System};
pub use report::{SampleHeader, SampleReport, SampleRow};

/// Exit codes.
pub mod exit {
    pub const MEMBER: i32 = 0;
    pub const NON_MEMBER: i32 = 1;
    pub const BOUNDARY: i32 = 2;
    pub const USAGE: i32 = 64;
    pub const NO_SECTION: i32 = 65;
    pub const IO: i32 = 66;
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    NoSection(String),
    #[error("{0}")]
    Io(String),
}

impl CliError {
    pub fn code(&self) -> i32 {
        match self {
            CliError::Usage(_) => exit::USAGE,
            CliError::NoSection(_) => exit::NO_SECTION,
            CliError::Io(_) => exit::IO,
        }
    }
}

impl From<constat_core::Error> for CliError {
    fn from(e: constat_core::Error) -> Self {
        CliError::Usage(e.to_string())
    }
}

#[derive(Debug, Parser)]
#[command(name = "constat", version, about = "Constitutive sets of convex static systems")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Decide whether a force lies in the constitutive set at a configuration.
    Check(CheckArgs),
    /// Classify every force on a rectangular grid.
    Sample(SampleArgs),
    /// Cross-check the numeric oracles against the closed forms.
    Verify(VerifyArgs),
    /// Reduce a generating family through its section.
    Reduce(ReduceArgs),
}

#[derive(Debug, Args)]
struct SystemArgs {
    /// JSON system descriptor.
    #[arg(long, value_name = "FILE", conflicts_with_all = ["example", "params", "dim"])]
    system: Option<PathBuf>,
    /// Built-in example id (1-10).
    #[arg(long, value_name = "ID")]
    example: Option<u8>,
    /// Example parameters, e.g. `rho=1` or `k=1,kp=1,rho=0.5`.
    #[arg(long, value_name = "NAME=VALUE,...")]
    params: Option<String>,
    /// Dimension of the example's affine space.
    #[arg(long)]
    dim: Option<usize>,
}

#[derive(Debug, Args)]
struct CheckArgs {
    #[command(flatten)]
    system: SystemArgs,
    /// Configuration coordinates, comma separated.
    #[arg(long, allow_hyphen_values = true)]
    q: String,
    /// Force components, comma separated.
    #[arg(long, allow_hyphen_values = true)]
    f: String,
    #[arg(long, default_value_t = 1e-6)]
    tol: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Args)]
struct SampleArgs {
    #[command(flatten)]
    system: SystemArgs,
    #[arg(long, allow_hyphen_values = true)]
    q: String,
    /// Base force; components without a grid axis keep these values.
    #[arg(long, allow_hyphen_values = true)]
    f: Option<String>,
    /// `min,max,step` for force component i, given once per axis in order.
    #[arg(long, allow_hyphen_values = true, value_name = "MIN,MAX,STEP")]
    grid: Vec<String>,
    #[arg(long, default_value_t = 1e-6)]
    tol: f64,
    /// Recorded in the report; sampling itself is deterministic.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    format: Format,
    /// Write the report here instead of standard output.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct VerifyArgs {
    /// Example ids, comma separated, or `all`.
    #[arg(long, default_value = "all")]
    example: String,
    #[arg(long, default_value_t = 1000)]
    trials: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Relative width of the boundary band excluded from comparison.
    #[arg(long, default_value_t = 1e-3)]
    tol: f64,
    #[arg(long, default_value_t = 3)]
    dim: usize,
}

#[derive(Debug, Args)]
struct ReduceArgs {
    #[arg(long)]
    example: u8,
    #[arg(long, value_name = "NAME=VALUE,...")]
    params: Option<String>,
    #[arg(long, default_value_t = 3)]
    dim: usize,
    /// Base configuration at which to report the reduced objects; defaults
    /// to the first basis vector.
    #[arg(long, allow_hyphen_values = true)]
    q: Option<String>,
    #[arg(long, default_value_t = 1e-9)]
    tol: f64,
    #[arg(long)]
    out: Option<PathBuf>,
}

/// Sizes rayon's global pool from `CONSTAT_THREADS` when set.
pub fn init_threads_from_env() -> Result<(), CliError> {
    let Ok(v) = std::env::var("CONSTAT_THREADS") else {
        return Ok(());
    };
    let n: usize = v
        .trim()
        .parse()
        .map_err(|_| CliError::Usage(format!("CONSTAT_THREADS must be a positive integer, got `{v}`")))?;
    if n == 0 {
        return Err(CliError::Usage("CONSTAT_THREADS must be positive".into()));
    }
    // a pool configured earlier in the process wins
    let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    Ok(())
}

pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { exit::USAGE } else { exit::MEMBER };
            let text = e.render().to_string();
            if e.use_stderr() {
                let _ = write!(err, "{text}");
            } else {
                let _ = write!(out, "{text}");
            }
            return code;
        }
    };
    let result = match cli.command {
        Command::Check(a) => commands::check(&a, out),
        Command::Sample(a) => commands::sample(&a, out),
        Command::Verify(a) => commands::verify(&a, out, err),
        Command::Reduce(a) => commands::reduce(&a, out),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            e.code()
        }
    }
}

pub(crate) fn parse_floats(text: &str, what: &str) -> Result<Vec<f64>, CliError> {
    text.split(',')
        .map(|s| {
            s.trim()
                .parse::<f64>()
                .map_err(|_| CliError::Usage(format!("{what}: `{s}` is not a number")))
        })
        .collect()
}

pub(crate) fn parse_params(text: Option<&str>) -> Result<BTreeMap<String, f64>, CliError> {
    let mut map = BTreeMap::new();
    let Some(text) = text else { return Ok(map) };
    for item in text.split(',').filter(|s| !s.trim().is_empty()) {
        let (name, value) = item
            .split_once('=')
            .ok_or_else(|| CliError::Usage(format!("parameter `{item}` is not NAME=VALUE")))?;
        let value: f64 = value
            .trim()
            .parse()
            .map_err(|_| CliError::Usage(format!("parameter `{name}`: `{value}` is not a number")))?;
        if map.insert(name.trim().to_string(), value).is_some() {
            return Err(CliError::Usage(format!("parameter `{name}` given twice")));
        }
    }
    Ok(map)
}
