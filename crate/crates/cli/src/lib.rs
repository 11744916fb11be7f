//! Driver behind the `flowbench` binary: run configuration, provenance
//! headers and the five workflows.

pub mod commands;
pub mod config;

use std::path::{Path, PathBuf};

use thiserror::Error;

pub use config::{parse_run_config, CaseKind, RunConfig, Solver};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("usage: {0}")]
    Usage(String),

    #[error("config: {0}")]
    Config(String),

    #[error(transparent)]
    Core(#[from] flowbench::Error),

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl CliError {
    /// 2 for bad invocations and configs, 1 for failed computations.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) | CliError::Config(_) => 2,
            CliError::Core(_) | CliError::Io { .. } => 1,
        }
    }

    pub(crate) fn io(path: &Path, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.to_path_buf(),
            source,
        }
    }
}

/// Identifies the tool, configuration and seeds behind an output file.
#[derive(Debug, Clone, serde::Serialize)]
pub struct Provenance {
    pub tool: &'static str,
    pub version: &'static str,
    pub config_sha256: String,
    pub seeds: Vec<u64>,
}

impl Provenance {
    pub fn new(config: &RunConfig, seeds: Vec<u64>) -> Self {
        Provenance {
            tool: "flowbench",
            version: env!("CARGO_PKG_VERSION"),
            config_sha256: config.hash(),
            seeds,
        }
    }

    /// `# key = value` lines for CSV outputs.
    pub fn csv_header(&self) -> String {
        let seeds: Vec<String> = self.seeds.iter().map(u64::to_string).collect();
        format!(
            "# tool = {} {}\n# config_sha256 = {}\n# seeds = {}\n",
            self.tool,
            self.version,
            self.config_sha256,
            seeds.join(" ")
        )
    }
}
