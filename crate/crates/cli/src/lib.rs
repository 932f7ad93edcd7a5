//! Command-line front end: configuration layering, dispatch to the simulation
//! modules and bit-stable table output.

pub mod config;
pub mod experiments;
pub mod figures;
pub mod table;

use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use crate::config::{from_table, parse_table, ConfigError, ExperimentConfig, Format, Kind};
use crate::experiments::RunError;

/// Environment variable holding the default output directory.
pub const OUT_ENV: &str = "CYCLOBLOCH_OUT";
pub const DEFAULT_OUT: &str = "cyclobloch-out";

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_RUNTIME: i32 = 3;

#[derive(Debug, Parser)]
#[command(
    name = "cyclobloch",
    version,
    about = "Cyclotron-Bloch dynamics on a lattice in crossed fields"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Chain dynamics from a Landau, delta or incoherent initial state.
    Evolve1d(RunArgs),
    /// Full lattice dynamics of an incoherent packet.
    Evolve2d(RunArgs),
    /// Spectrum and currents of the reduced chain over quasimomentum.
    Spectrum(RunArgs),
    /// Build a transporting state and verify its drift.
    Transport(RunArgs),
    /// Stroboscopic map and island measure of the classical limit.
    ClassicalMap(RunArgs),
    /// Disorder and phase averaged spreading of one model.
    Ensemble(RunArgs),
    /// Chain against lattice spreading at equal parameters.
    Compare(RunArgs),
    /// Run whatever kind the configuration file names.
    Run(RunArgs),
    /// List the figure presets.
    Figures,
}

#[derive(Debug, Args, Clone, Default)]
pub struct RunArgs {
    /// TOML configuration file.
    #[arg(long, value_name = "PATH")]
    pub config: Option<PathBuf>,
    /// Figure preset applied beneath the file and flags.
    #[arg(long, value_name = "NAME")]
    pub figure: Option<String>,
    #[arg(long, value_name = "N")]
    pub seed: Option<u64>,
    /// Output directory [default: $CYCLOBLOCH_OUT or ./cyclobloch-out].
    #[arg(long, value_name = "DIR")]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub format: Option<Format>,
    /// Worker threads; results do not depend on it.
    #[arg(long, value_name = "N")]
    pub threads: Option<usize>,
    /// Override one key, e.g. `--set F=0.3` or `--set spectrum.mathieu=true`.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    pub set: Vec<String>,
}

/// Failure of a run, mapped onto an exit code.
#[derive(Debug)]
pub enum Failure {
    Config(String),
    Runtime(String),
}

impl Failure {
    pub fn code(&self) -> i32 {
        match self {
            Failure::Config(_) => EXIT_CONFIG,
            Failure::Runtime(_) => EXIT_RUNTIME,
        }
    }

    fn record(&self) -> serde_json::Value {
        let (kind, message) = match self {
            Failure::Config(m) => ("config", m),
            Failure::Runtime(m) => ("runtime", m),
        };
        serde_json::json!({ "error": kind, "message": message, "exit_code": self.code() })
    }
}

impl From<ConfigError> for Failure {
    fn from(e: ConfigError) -> Self {
        Failure::Config(e.to_string())
    }
}

impl From<RunError> for Failure {
    fn from(e: RunError) -> Self {
        Failure::Runtime(e.to_string())
    }
}

/// Run manifest written next to the tables.
#[derive(Debug, Serialize)]
pub struct Manifest {
    pub version: &'static str,
    pub kind: &'static str,
    pub figure: Option<String>,
    pub seed: u64,
    pub threads: usize,
    pub wall_time_seconds: f64,
    pub tables: Vec<String>,
    pub warnings: Vec<String>,
    /// Options a figure preset could not take from the figure and left at their defaults.
    pub assumed_defaults: Vec<String>,
}

/// Parses `KEY=VALUE` into a one-key table; the value is read as TOML and falls back to a string.
fn override_table(item: &str) -> Result<toml::Table, ConfigError> {
    let bad = || ConfigError::Parse {
        origin: format!("--set {item}"),
        message: "expected KEY=VALUE".into(),
    };
    let (key, value) = item.split_once('=').ok_or_else(bad)?;
    let key = key.trim();
    if key.is_empty() {
        return Err(bad());
    }
    let value = match format!("v = {value}").parse::<toml::Table>() {
        Ok(mut t) => t.remove("v").expect("parsed key"),
        Err(_) => toml::Value::String(value.to_string()),
    };
    let mut table = toml::Table::new();
    let parts: Vec<&str> = key.split('.').collect();
    let (last, path) = parts.split_last().expect("non-empty key");
    let mut cursor = &mut table;
    for part in path {
        cursor = cursor
            .entry(part.to_string())
            .or_insert_with(|| toml::Value::Table(toml::Table::new()))
            .as_table_mut()
            .expect("fresh table");
    }
    cursor.insert(last.to_string(), value);
    Ok(table)
}

/// Layers preset, file and flags into one configuration, not yet resolved.
pub fn layered_config(
    kind: Option<Kind>,
    args: &RunArgs,
) -> Result<(ExperimentConfig, Vec<String>), ConfigError> {
    let mut table = toml::Table::new();
    let mut assumed = Vec::new();
    if let Some(name) = &args.figure {
        let fig = figures::find(name).ok_or_else(|| {
            ConfigError::Invalid(format!(
                "unknown figure `{name}`; presets: {}",
                figures::names().join(", ")
            ))
        })?;
        table = parse_table(fig.config, fig.name)?;
        assumed = fig.assumed.iter().map(|s| s.to_string()).collect();
    }
    if let Some(path) = &args.config {
        let origin = path.display().to_string();
        let text = fs::read_to_string(path).map_err(|e| ConfigError::Parse {
            origin: origin.clone(),
            message: e.to_string(),
        })?;
        config::merge(&mut table, parse_table(&text, &origin)?);
    }
    for item in &args.set {
        config::merge(&mut table, override_table(item)?);
    }
    let mut flags = toml::Table::new();
    if let Some(seed) = args.seed {
        flags.insert("seed".into(), toml::Value::Integer(seed as i64));
    }
    if let Some(f) = args.format {
        let name = match f {
            Format::Csv => "csv",
            Format::Ndjson => "ndjson",
        };
        flags.insert("format".into(), toml::Value::String(name.into()));
    }
    config::merge(&mut table, flags);
    match (kind, table.get("kind")) {
        (Some(k), None) => {
            table.insert("kind".into(), toml::Value::String(k.name().into()));
        }
        (Some(k), Some(v)) if v.as_str() != Some(k.name()) => {
            return Err(ConfigError::Invalid(format!(
                "configuration kind {v} does not match the subcommand `{}`",
                k.name()
            )));
        }
        (None, None) => return Err(ConfigError::Invalid("no `kind` given".into())),
        _ => {}
    }
    let mut cfg = from_table(table, "configuration")?;
    if let Some(out) = &args.out {
        cfg.out = Some(out.clone());
    }
    Ok((cfg, assumed))
}

fn output_dir(cfg: &ExperimentConfig) -> PathBuf {
    cfg.out
        .clone()
        .or_else(|| {
            std::env::var_os(OUT_ENV)
                .filter(|v| !v.is_empty())
                .map(PathBuf::from)
        })
        .unwrap_or_else(|| PathBuf::from(DEFAULT_OUT))
}

fn io_failure(path: &Path, e: std::io::Error) -> Failure {
    Failure::Runtime(format!("{}: {e}", path.display()))
}

/// Resolves, runs and writes one experiment; returns the output directory.
pub fn execute(kind: Option<Kind>, args: &RunArgs) -> Result<PathBuf, (Failure, Option<PathBuf>)> {
    let (mut cfg, assumed) = layered_config(kind, args).map_err(|e| (e.into(), None))?;
    let resolution = cfg.resolve().map_err(|e| (e.into(), None))?;
    let dir = output_dir(&cfg);
    // the directory is not part of the experiment, so the written config leaves it out
    cfg.out = None;
    let fail = |f: Failure| (f, Some(dir.clone()));
    fs::create_dir_all(&dir).map_err(|e| fail(io_failure(&dir, e)))?;
    for w in &resolution.warnings {
        eprintln!("warning: {w}");
    }
    let threads = args
        .threads
        .unwrap_or_else(rayon::current_num_threads)
        .max(1);
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| fail(Failure::Runtime(e.to_string())))?;
    let start = Instant::now();
    let tables = pool
        .install(|| experiments::run(&cfg, &resolution.params))
        .map_err(|e| fail(e.into()))?;
    let wall = start.elapsed().as_secs_f64();

    let config_path = dir.join("config.toml");
    fs::write(&config_path, cfg.to_toml()).map_err(|e| fail(io_failure(&config_path, e)))?;
    let format = cfg.format.expect("resolved");
    let mut names = Vec::new();
    for t in &tables {
        t.write(&dir, format)
            .map_err(|e| fail(io_failure(&dir, e)))?;
        names.push(t.file_name(format));
    }
    let manifest = Manifest {
        version: env!("CARGO_PKG_VERSION"),
        kind: cfg.kind.name(),
        figure: args.figure.clone(),
        seed: resolution.params.seed,
        threads,
        wall_time_seconds: wall,
        tables: names,
        warnings: resolution.warnings,
        assumed_defaults: assumed,
    };
    let manifest_path = dir.join("manifest.json");
    let text = serde_json::to_string_pretty(&manifest).expect("manifest serializes") + "\n";
    fs::write(&manifest_path, text).map_err(|e| fail(io_failure(&manifest_path, e)))?;
    Ok(dir)
}

fn command_kind(command: Command) -> Option<(Option<Kind>, RunArgs)> {
    Some(match command {
        Command::Figures => return None,
        Command::Evolve1d(a) => (Some(Kind::Evolve1d), a),
        Command::Evolve2d(a) => (Some(Kind::Evolve2d), a),
        Command::Spectrum(a) => (Some(Kind::Spectrum), a),
        Command::Transport(a) => (Some(Kind::Transport), a),
        Command::ClassicalMap(a) => (Some(Kind::ClassicalMap), a),
        Command::Ensemble(a) => (Some(Kind::Ensemble), a),
        Command::Compare(a) => (Some(Kind::Compare), a),
        Command::Run(a) => (None, a),
    })
}

/// Parses and runs one experiment without printing; returns the output directory.
pub fn execute_argv<I, T>(argv: I) -> Result<PathBuf, Failure>
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = Cli::try_parse_from(argv).map_err(|e| Failure::Config(e.to_string()))?;
    let (kind, args) = command_kind(cli.command)
        .ok_or_else(|| Failure::Config("not an experiment subcommand".into()))?;
    execute(kind, &args).map_err(|(f, _)| f)
}

/// Entry point shared by the binary and the tests; returns the exit code.
pub fn main_with<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    let Some((kind, args)) = command_kind(cli.command) else {
        for f in figures::FIGURES {
            println!("{:8} {}", f.name, f.description);
        }
        return EXIT_OK;
    };
    match execute(kind, &args) {
        Ok(dir) => {
            println!("{}", dir.display());
            EXIT_OK
        }
        Err((failure, dir)) => {
            let record = failure.record();
            eprintln!("{record}");
            if let Some(dir) = dir {
                let _ = fs::write(dir.join("error.json"), format!("{record}\n"));
            }
            failure.code()
        }
    }
}
