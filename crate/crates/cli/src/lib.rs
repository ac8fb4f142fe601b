//! `dyadic`: command-line driver for the experiments in `dyadic-core`.
//!
//! Exit codes: 0 success, 1 verification failure, 2 configuration error,
//! 3 resource cap exceeded.

pub mod commands;
pub mod config;
pub mod output;

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use dyadic_core::commutator::cases::{case_terms, CaseInput, CaseTerm};
use dyadic_core::shift::ShiftMap;

use crate::config::{RunConfig, SeedSpec};

pub const EXIT_OK: i32 = 0;
pub const EXIT_VERIFY: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_CAP: i32 = 3;

#[derive(Debug)]
pub enum CliError {
    Config(String),
    Cap(String),
    Compute(String),
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => EXIT_CONFIG,
            CliError::Cap(_) => EXIT_CAP,
            CliError::Compute(_) | CliError::Io(_) => EXIT_VERIFY,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Config(m) => write!(f, "config error: {m}"),
            CliError::Cap(m) => write!(f, "resource cap: {m}"),
            CliError::Compute(m) => write!(f, "computation failed: {m}"),
            CliError::Io(m) => write!(f, "i/o error: {m}"),
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "dyadic", version, about = "Dyadic shifts, paraproducts and commutator experiments")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// JSON run configuration (schema version 1).
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Seeds as `1,2,5` or `0..100`; overrides the config.
    #[arg(long, global = true)]
    pub seed_list: Option<String>,
    /// Directory for `<command>.csv` and `<command>.json`; without it the CSV goes to stdout.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Fixture file for regression comparisons.
    #[arg(long, global = true)]
    pub fixtures: Option<PathBuf>,
    /// Print the resolved plan and exit without computing.
    #[arg(long, global = true)]
    pub dry_run: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Subcommand)]
pub enum Command {
    /// Check the one-parameter case table against direct expansion.
    VerifyCases,
    /// Check the commutator decomposition on random inputs.
    VerifyDecomposition,
    /// BMO estimates of a symbol.
    Bmo,
    /// Operator norm of the commutator with a symbol.
    Opnorm,
    /// Operator norm over BMO norm.
    Ratio,
    /// Span residual of sampled shifts against a Riesz transform.
    Riesz,
    /// Empirical paraproduct bound.
    ParaBound,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::VerifyCases => "verify-cases",
            Command::VerifyDecomposition => "verify-decomposition",
            Command::Bmo => "bmo",
            Command::Opnorm => "opnorm",
            Command::Ratio => "ratio",
            Command::Riesz => "riesz",
            Command::ParaBound => "para-bound",
        }
    }
}

/// Replaceable collaborators; tests swap in faulty ones.
#[derive(Clone, Copy)]
pub struct Env {
    pub case_terms: fn(&CaseInput, &ShiftMap) -> Vec<CaseTerm>,
}

impl Default for Env {
    fn default() -> Self {
        Env { case_terms }
    }
}

pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    run_with(&Env::default(), args, out, err)
}

pub fn run_with<I, T>(env: &Env, args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            if e.use_stderr() {
                let _ = write!(err, "{e}");
                return EXIT_CONFIG;
            }
            let _ = write!(out, "{e}");
            return EXIT_OK;
        }
    };
    match execute(env, &cli, out, err) {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(err, "{e}");
            e.exit_code()
        }
    }
}

fn load_config(cli: &Cli) -> Result<(RunConfig, PathBuf), CliError> {
    let (mut cfg, base) = match &cli.config {
        Some(p) => (RunConfig::load(p)?, p.parent().map(Path::to_path_buf).unwrap_or_default()),
        None => (RunConfig::empty(), PathBuf::from(".")),
    };
    if let Some(s) = &cli.seed_list {
        cfg.seeds = Some(SeedSpec::parse(s)?);
    }
    if let Some(p) = &cli.out {
        cfg.out = Some(p.clone());
    }
    if let Some(p) = &cli.fixtures {
        // flag paths are relative to the working directory
        cfg.fixtures = Some(std::path::absolute(p).map_err(|e| CliError::Io(e.to_string()))?);
    }
    Ok((cfg, base))
}

fn execute(env: &Env, cli: &Cli, out: &mut dyn Write, err: &mut dyn Write) -> Result<i32, CliError> {
    let io = |e: std::io::Error| CliError::Io(e.to_string());
    let (cfg, base) = load_config(cli)?;
    let plan = commands::resolve(cli.command, &cfg, &base)?;
    if cli.dry_run {
        let text = serde_json::to_string_pretty(&plan).expect("plan serializes");
        writeln!(out, "{text}").map_err(io)?;
        if let Some(dir) = &cfg.out {
            writeln!(out, "outputs: {}", dir.join(format!("{}.{{csv,json}}", cli.command.name())).display())
                .map_err(io)?;
        }
        return Ok(EXIT_OK);
    }
    let report = commands::execute(&plan, env)?;
    for w in &report.warnings {
        writeln!(err, "warning: {w}").map_err(io)?;
    }
    let csv = report.table.to_csv();
    match &cfg.out {
        Some(dir) => {
            let dir = if dir.is_absolute() || cli.out.is_some() { dir.clone() } else { base.join(dir) };
            std::fs::create_dir_all(&dir).map_err(io)?;
            let stem = dir.join(cli.command.name());
            std::fs::write(stem.with_extension("csv"), &csv).map_err(io)?;
            let json = report.table.to_json(cli.command.name(), &report.summary);
            std::fs::write(stem.with_extension("json"), serde_json::to_string_pretty(&json).expect("json") + "\n")
                .map_err(io)?;
            for m in &report.messages {
                writeln!(out, "{m}").map_err(io)?;
            }
            writeln!(out, "wrote {}", stem.with_extension("csv").display()).map_err(io)?;
        }
        None => {
            write!(out, "{csv}").map_err(io)?;
            for m in &report.messages {
                writeln!(err, "{m}").map_err(io)?;
            }
        }
    }
    Ok(if report.passed { EXIT_OK } else { EXIT_VERIFY })
}
