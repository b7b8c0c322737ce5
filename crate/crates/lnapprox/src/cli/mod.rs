//! Command-line front end: reproducible experiments driven by flags or a flat
//! JSON config, writing CSV tables and JSON reports.
//!
//! Exit codes: 0 when every asserted check holds, 1 when a check fails or a
//! run aborts at run time, 2 for invalid configurations.

mod commands;
mod config;

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use serde_json::{Map, Value};

use crate::error::Error;

/// Maximum d, s and N accepted by `sobolev` without `--override-guardrails`.
pub const GUARDRAIL_D: usize = 3;
pub const GUARDRAIL_S: usize = 4;
pub const GUARDRAIL_N: usize = 16;

#[derive(Debug, Parser)]
#[command(name = "lnapprox", version, about = "Exact normalization-layer compilers and constructive approximation experiments")]
struct Cli {
    #[command(flatten)]
    common: CommonArgs,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct CommonArgs {
    /// Flat JSON file whose keys mirror the flags (flags take precedence).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Seed of the run's random generator.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Grid points per axis for error measurement.
    #[arg(long, global = true)]
    grid: Option<usize>,
    /// Lift the d ≤ 3, s ≤ 4, N ≤ 16 limits of `sobolev`.
    #[arg(long, global = true)]
    override_guardrails: bool,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Compile a random source net and check pointwise equality.
    Compile(commands::CompileArgs),
    /// Staircase approximation of a Lipschitz target on [0, 1].
    Approx(commands::ApproxArgs),
    /// Two-hidden-layer approximation rates for a smooth target.
    Sobolev(commands::SobolevArgs),
    /// Partition-of-unity bound checks on every cube.
    Pou(commands::PouArgs),
    /// Best single-group LN approximation of cos(πx) on [−2, 2].
    Negsearch(commands::NegsearchArgs),
    /// Compare a saved net against another net or a named target.
    Verify(commands::VerifyArgs),
}

/// Failure classes mapped to exit codes.
#[derive(Debug, Clone, PartialEq)]
pub enum CliError {
    /// Invalid configuration (exit 2).
    Config(String),
    /// Run-time failure such as I/O or numerical breakdown (exit 1).
    Runtime(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => 2,
            CliError::Runtime(_) => 1,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Config(m) => write!(f, "config error: {m}"),
            CliError::Runtime(m) => write!(f, "error: {m}"),
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        match e {
            Error::InvalidArgument(_) | Error::Dimension { .. } | Error::Hypothesis(_) | Error::Serde(_) => CliError::Config(e.to_string()),
            Error::Unbounded(_) | Error::Internal(_) => CliError::Runtime(e.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Runtime(e.to_string())
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        CliError::Runtime(e.to_string())
    }
}

/// Result of a completed run: whether all asserted checks held, plus a
/// one-line summary.
#[derive(Debug, Clone)]
pub struct Outcome {
    pub pass: bool,
    pub summary: String,
}

/// Resolved settings shared by all subcommands.
pub(crate) struct RunContext {
    pub command: &'static str,
    pub seed: u64,
    pub out: PathBuf,
    pub grid: Option<usize>,
    pub override_guardrails: bool,
}

impl RunContext {
    fn path(&self, suffix: &str) -> PathBuf {
        self.out.join(format!("{}{suffix}", self.command))
    }

    /// Writes `<command>.csv`.
    pub(crate) fn write_csv<T: Serialize>(&self, rows: &[T]) -> Result<PathBuf, CliError> {
        write_csv_file(&self.path(".csv"), rows)
    }

    /// Writes `<command>_timing.csv`, kept apart so the main table stays
    /// byte-identical across repeated runs.
    pub(crate) fn write_timing<T: Serialize>(&self, rows: &[T]) -> Result<PathBuf, CliError> {
        write_csv_file(&self.path("_timing.csv"), rows)
    }

    /// Writes `<command><suffix>` as pretty JSON.
    pub(crate) fn write_json<T: Serialize>(&self, suffix: &str, value: &T) -> Result<PathBuf, CliError> {
        let path = self.path(suffix);
        let text = serde_json::to_string_pretty(value).map_err(|e| CliError::Runtime(e.to_string()))?;
        std::fs::write(&path, text + "\n")?;
        Ok(path)
    }

    /// Writes the resolved configuration, including the seed.
    pub(crate) fn write_config(&self, params: Map<String, Value>) -> Result<PathBuf, CliError> {
        let mut doc = Map::new();
        doc.insert("command".into(), Value::from(self.command));
        doc.insert("seed".into(), Value::from(self.seed));
        doc.insert("grid".into(), self.grid.map(Value::from).unwrap_or(Value::Null));
        doc.insert("override_guardrails".into(), Value::from(self.override_guardrails));
        doc.insert("params".into(), Value::Object(params));
        self.write_json("_config.json", &doc)
    }
}

fn write_csv_file<T: Serialize>(path: &Path, rows: &[T]) -> Result<PathBuf, CliError> {
    let mut w = csv::Writer::from_path(path)?;
    for row in rows {
        w.serialize(row)?;
    }
    w.flush()?;
    Ok(path.to_path_buf())
}

/// Seconds since the Unix epoch, for timing sidecars.
pub(crate) fn unix_time() -> f64 {
    std::time::SystemTime::now().duration_since(std::time::UNIX_EPOCH).map(|d| d.as_secs_f64()).unwrap_or(0.0)
}

/// Parses `args` (including the program name), runs the subcommand and
/// returns the process exit code.
pub fn run<I, T>(args: I) -> u8
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match execute(cli) {
        Ok(outcome) => {
            println!("{} {}", if outcome.pass { "PASS" } else { "FAIL" }, outcome.summary);
            if outcome.pass {
                0
            } else {
                1
            }
        }
        Err(e) => {
            eprintln!("{e}");
            e.exit_code()
        }
    }
}

fn execute(cli: Cli) -> Result<Outcome, CliError> {
    let command: &'static str = match &cli.command {
        Command::Compile(_) => "compile",
        Command::Approx(_) => "approx",
        Command::Sobolev(_) => "sobolev",
        Command::Pou(_) => "pou",
        Command::Negsearch(_) => "negsearch",
        Command::Verify(_) => "verify",
    };
    let mut cfg = config::Resolver::load(cli.common.config.as_deref())?;
    let seed = cfg.get(cli.common.seed, "seed", 0u64)?;
    let out = cfg.get(cli.common.out, "out", PathBuf::from("out"))?;
    let grid = cfg.opt(cli.common.grid, "grid")?;
    let override_guardrails = cfg.get(cli.common.override_guardrails.then_some(true), "override_guardrails", false)?;
    if let Some(g) = grid {
        if g < 2 {
            return Err(CliError::Config("grid needs at least two points per axis".into()));
        }
    }
    std::fs::create_dir_all(&out)?;
    let ctx = RunContext { command, seed, out, grid, override_guardrails };
    match cli.command {
        Command::Compile(a) => commands::compile(&ctx, a, cfg),
        Command::Approx(a) => commands::approx(&ctx, a, cfg),
        Command::Sobolev(a) => commands::sobolev(&ctx, a, cfg),
        Command::Pou(a) => commands::pou(&ctx, a, cfg),
        Command::Negsearch(a) => commands::negsearch(&ctx, a, cfg),
        Command::Verify(a) => commands::verify(&ctx, a, cfg),
    }
}
