//! `vulngraph`: batch workflows over registry and advisory snapshots, from
//! feed validation to graph export, dependency resolution, vulnerability
//! propagation, and ecosystem statistics.

mod commands;
mod output;

use std::fmt;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(
    name = "vulngraph",
    version,
    about = "Dependency-vulnerability knowledge graph toolkit for Cargo registry snapshots"
)]
pub struct Cli {
    /// Registry snapshot feed, newline-delimited JSON.
    #[arg(long, global = true)]
    pub registry: Option<PathBuf>,

    /// Advisory feed, newline-delimited JSON.
    #[arg(long, global = true)]
    pub advisories: Option<PathBuf>,

    /// Output directory; each command writes under <out>/<command>/.
    #[arg(long, global = true, env = "VULNGRAPH_OUT", default_value = "vulngraph-out")]
    pub out: PathBuf,

    /// Fail on the first invalid input record instead of skipping it.
    #[arg(long, global = true)]
    pub strict: bool,

    /// Worker threads for propagation; 0 uses every core.
    #[arg(long, global = true, default_value_t = 0)]
    pub jobs: usize,

    /// Most nodes allowed on one root-to-leaf resolution path.
    #[arg(long, global = true, default_value_t = 100)]
    pub max_path_nodes: usize,

    /// Let resolution select yanked versions.
    #[arg(long, global = true)]
    pub allow_yanked: bool,

    /// Rendering for tabular outputs; JSON is always written.
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    pub format: Format,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
    Text,
}

impl Format {
    pub fn as_str(self) -> &'static str {
        match self {
            Format::Json => "json",
            Format::Csv => "csv",
            Format::Text => "text",
        }
    }
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Validate feeds and store a normalized snapshot.
    Ingest,
    /// Apply fresh feeds against the stored snapshot and report what changed.
    Update,
    /// Build the knowledge graph, export it as CSV, and report exact counts.
    Build,
    /// Resolve one version's dependency tree.
    Resolve {
        /// Library name.
        name: String,
        /// Version number, e.g. 1.2.3.
        version: String,
        /// Compare the resolved tree against a Cargo.lock file.
        #[arg(long)]
        verify_lock: Option<PathBuf>,
    },
    /// Compute which dependents an advisory reaches.
    Propagate {
        /// CVE identifier; or pass --all to cover every advisory.
        cve: Option<String>,
        /// Propagate every advisory and write ecosystem-level statistics.
        #[arg(long)]
        all: bool,
    },
    /// Advisory and ecosystem statistics over the built graph.
    Stats,
}

/// Exit codes are a stable contract: 0 success, 1 environment or input
/// error, 2 validation failure.
#[derive(Debug)]
pub enum CliError {
    Input(String),
    Validation(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Input(_) => 1,
            CliError::Validation(_) => 2,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Input(msg) | CliError::Validation(msg) => f.write_str(msg),
        }
    }
}

impl From<vulngraph_core::ingest::IngestError> for CliError {
    fn from(e: vulngraph_core::ingest::IngestError) -> Self {
        match e {
            vulngraph_core::ingest::IngestError::Validation(_) => CliError::Validation(e.to_string()),
            other => CliError::Input(other.to_string()),
        }
    }
}

fn main() -> ExitCode {
    env_logger::init();
    let cli = Cli::parse();
    match commands::run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
