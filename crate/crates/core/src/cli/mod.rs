//! Command-line front end: `run`, `validate` and `list-scenarios`.
//!
//! Exit codes: 0 success, 1 I/O failure, 2 configuration error, 3 numerical
//! failure (a state invariant or a singular solve).

mod config;
mod run;
mod validate;

use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use serde::Serialize;
use thiserror::Error;

pub use config::{
    EigenBlock, MapBlock, PlBlock, Points, RunConfig, SaturationBlock, Scenario, SolverBlock,
    SpectrumBlock, SwitchBlock, TwoPulseBlock, SCHEMA_VERSION,
};
pub use run::{execute, Output};
pub use validate::{validate_config, Report};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("cannot read {}: {source}", path.display())]
    Read {
        path: PathBuf,
        source: std::io::Error,
    },

    #[error("cannot write {}: {source}", path.display())]
    Write {
        path: PathBuf,
        source: std::io::Error,
    },

    #[error("config: {0}")]
    Parse(String),

    #[error("override `{0}`: {1}")]
    Override(String, String),

    #[error("config: missing `{0}`")]
    MissingBlock(&'static str),

    #[error("config: {0}")]
    Invalid(String),

    #[error("thread pool: {0}")]
    Threads(String),

    #[error(transparent)]
    Model(#[from] crate::Error),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Model(e) if e.is_numerical() => 3,
            CliError::Write { .. } | CliError::Threads(_) => 1,
            _ => 2,
        }
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "qdswitch",
    version,
    about = "Quantum-dot/cavity switching simulations"
)]
pub struct Cli {
    /// Worker threads (default: all cores). Results do not depend on it.
    #[arg(long, global = true)]
    pub threads: Option<usize>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run a scenario and write `<scenario>_<name>.csv` files plus `<scenario>_meta.json`.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Dotted-key override, e.g. `system.g=21.2`. Repeatable.
        #[arg(long = "set", value_name = "KEY=VALUE")]
        set: Vec<String>,
        /// Output directory (overrides `output_dir`).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Master seed (overrides `master_seed`).
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Check a configuration without running it.
    Validate {
        #[arg(long)]
        config: PathBuf,
        #[arg(long = "set", value_name = "KEY=VALUE")]
        set: Vec<String>,
    },
    /// List available scenarios and the config blocks each one needs.
    ListScenarios,
}

#[derive(Serialize)]
struct Meta<'a> {
    scenario: &'static str,
    version: &'static str,
    schema_version: u32,
    master_seed: Option<u64>,
    outputs: Vec<String>,
    summary: &'a serde_json::Map<String, serde_json::Value>,
    config: &'a RunConfig,
}

pub fn load_config(path: &Path, overrides: &[String]) -> Result<RunConfig, CliError> {
    let text = fs::read_to_string(path).map_err(|source| CliError::Read {
        path: path.to_path_buf(),
        source,
    })?;
    RunConfig::from_toml(&text, overrides)
}

fn write_file(path: PathBuf, body: &str) -> Result<(), CliError> {
    fs::write(&path, body).map_err(|source| CliError::Write { path, source })
}

/// Write every CSV and the JSON sidecar; returns the file names written.
pub fn write_outputs(
    cfg: &RunConfig,
    output: &Output,
    dir: &Path,
) -> Result<Vec<PathBuf>, CliError> {
    fs::create_dir_all(dir).map_err(|source| CliError::Write {
        path: dir.to_path_buf(),
        source,
    })?;
    let scenario = cfg.scenario.name();
    let mut written = Vec::new();
    let mut names = Vec::new();
    for (name, csv) in &output.files {
        let file = format!("{scenario}_{name}.csv");
        write_file(dir.join(&file), csv)?;
        written.push(dir.join(&file));
        names.push(file);
    }
    let meta = Meta {
        scenario,
        version: env!("CARGO_PKG_VERSION"),
        schema_version: cfg.schema_version,
        master_seed: cfg.master_seed,
        outputs: names,
        summary: &output.summary,
        config: cfg,
    };
    let mut json =
        serde_json::to_string_pretty(&meta).map_err(|e| CliError::Invalid(e.to_string()))?;
    json.push('\n');
    let meta_path = dir.join(format!("{scenario}_meta.json"));
    write_file(meta_path.clone(), &json)?;
    written.push(meta_path);
    Ok(written)
}

fn with_threads<T: Send>(
    threads: Option<usize>,
    f: impl FnOnce() -> T + Send,
) -> Result<T, CliError> {
    match threads {
        None => Ok(f()),
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| CliError::Threads(e.to_string()))?;
            Ok(pool.install(f))
        }
    }
}

fn run_command(
    config: &Path,
    set: &[String],
    out: Option<PathBuf>,
    seed: Option<u64>,
    threads: Option<usize>,
) -> Result<Vec<PathBuf>, CliError> {
    let mut cfg = load_config(config, set)?;
    if let Some(seed) = seed {
        cfg.master_seed = Some(seed);
    }
    if let Some(out) = out {
        cfg.output_dir = out;
    }
    let report = validate_config(&cfg);
    for w in &report.warnings {
        eprintln!("warning: {w}");
    }
    if !report.is_valid() {
        return Err(CliError::Invalid(report.errors.join("; ")));
    }
    let output = with_threads(threads, || execute(&cfg))??;
    write_outputs(&cfg, &output, &cfg.output_dir)
}

/// Execute a parsed command line, printing to stdout/stderr. Returns the exit code.
pub fn dispatch(cli: Cli) -> u8 {
    match cli.command {
        Command::ListScenarios => {
            let mut stdout = std::io::stdout().lock();
            for s in Scenario::ALL {
                let blocks = s.required_blocks().join(", ");
                let _ = writeln!(stdout, "{:<17} {} [{blocks}]", s.name(), s.description());
            }
            0
        }
        Command::Validate { config, set } => {
            let report = match load_config(&config, &set) {
                Ok(cfg) => validate_config(&cfg),
                Err(e) => Report {
                    errors: vec![e.to_string()],
                    ..Report::default()
                },
            };
            print!("{report}");
            if report.is_valid() {
                0
            } else {
                2
            }
        }
        Command::Run {
            config,
            set,
            out,
            seed,
        } => match run_command(&config, &set, out, seed, cli.threads) {
            Ok(files) => {
                for f in files {
                    println!("{}", f.display());
                }
                0
            }
            Err(e) => {
                eprintln!("error: {e}");
                e.exit_code()
            }
        },
    }
}
