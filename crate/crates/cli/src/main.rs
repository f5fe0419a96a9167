//! `openindex`: operator commands over a local store.
//!
//! Exit codes:
//!
//! | code | meaning                                        |
//! |------|------------------------------------------------|
//! | 0    | success                                        |
//! | 1    | internal or storage error                      |
//! | 2    | unreadable input or bad configuration          |
//! | 3    | ingest finished but rejected some records      |
//! | 4    | store is locked by another process             |
//! | 5    | harvest transport or protocol failure          |
//! | 6    | validate found integrity violations            |
//! | 7    | dump export or import failed                   |

mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use serde_json::Value;
use thiserror::Error;

use openindex_core::config::{ConfigError, DEFAULT_CONFIG_FILE};
use openindex_core::model::SourceKind;

#[derive(Debug, Parser)]
#[command(name = "openindex", version, about = "Build, inspect and serve an open scholarly metadata index")]
pub struct Cli {
    /// Config file (default ./openindex.toml; optional unless given).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Store directory; overrides `data_dir`.
    #[arg(long, global = true)]
    data_dir: Option<PathBuf>,
    /// Override any config key, e.g. `--set author_threshold=0.6`.
    #[arg(long = "set", value_name = "KEY=VALUE", global = true)]
    set: Vec<String>,
    /// Print one JSON summary line on stdout.
    #[arg(long, global = true)]
    json: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum Source {
    Crossref,
    Pubmed,
    Repository,
}

impl From<Source> for SourceKind {
    fn from(s: Source) -> Self {
        match s {
            Source::Crossref => SourceKind::Crossref,
            Source::Pubmed => SourceKind::Pubmed,
            Source::Repository => SourceKind::Repository,
        }
    }
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Ingest a file: JSON lines (or a JSON array) for crossref/repository, XML for pubmed.
    Ingest {
        #[arg(long, value_enum)]
        source: Source,
        #[arg(long)]
        input: PathBuf,
        /// Write one JSON line per record outcome here.
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Pull a cursored works listing until exhausted, ingesting every page.
    Harvest {
        #[arg(long)]
        endpoint: String,
        /// Resume from a cursor printed by an earlier run.
        #[arg(long)]
        cursor: Option<String>,
        #[arg(long, default_value_t = 100)]
        rows: usize,
    },
    /// Serve the read-only REST API until interrupted.
    Serve {
        #[arg(long)]
        port: Option<u16>,
    },
    /// Export the store as a checksummed dump.
    Dump {
        #[arg(long)]
        out: PathBuf,
    },
    /// Import a dump into an empty store.
    Load {
        #[arg(long = "in")]
        input: PathBuf,
    },
    /// Per-kind counts, external-id coverage and concept coverage.
    Stats,
    /// Run the integrity check.
    Validate,
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("{0}")]
    Input(String),
    #[error("{0}")]
    Busy(String),
    #[error("{0}")]
    Dump(String),
    #[error("{0}")]
    Internal(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) | CliError::Input(_) => 2,
            CliError::Busy(_) => 4,
            CliError::Dump(_) => 7,
            CliError::Internal(_) => 1,
        }
    }

    fn kind(&self) -> &'static str {
        match self {
            CliError::Config(_) => "config",
            CliError::Input(_) => "input",
            CliError::Busy(_) => "busy",
            CliError::Dump(_) => "dump",
            CliError::Internal(_) => "internal",
        }
    }
}

/// What a command prints and the code it exits with.
pub struct Outcome {
    pub summary: Value,
    pub code: u8,
}

fn print_summary(summary: &Value, json: bool) {
    if json {
        println!("{summary}");
        return;
    }
    match summary {
        Value::Object(map) => {
            for (k, v) in map {
                match v {
                    Value::String(s) => println!("{k}: {s}"),
                    other => println!("{k}: {other}"),
                }
            }
        }
        other => println!("{other}"),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let json = cli.json;
    match commands::run(cli) {
        Ok(out) => {
            print_summary(&out.summary, json);
            ExitCode::from(out.code)
        }
        Err(e) => {
            if json {
                println!("{}", serde_json::json!({ "error": e.kind(), "message": e.to_string() }));
            }
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

pub fn default_config_path() -> PathBuf {
    PathBuf::from(DEFAULT_CONFIG_FILE)
}
