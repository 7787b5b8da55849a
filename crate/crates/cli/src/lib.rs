//! Config-driven runner for the delay-smoothing experiments.
//!
//! A run reads one TOML config, writes CSV data files, `summary.json` and
//! `resolved_config.toml` into the output directory, and reports an exit code:
//! 0 on success, 2 on invalid input, 3 when a certificate or acceptance check fails.

pub mod catalog;
pub mod config;
pub mod experiments;
pub mod output;

use std::fs;
use std::path::Path;

use serde_json::{json, Value};

use delay_smoothing::Error;

pub use catalog::{default_catalog, Catalog};
pub use config::{Experiment, RunConfig};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("validation error: {0}")]
    Validation(String),
    #[error("certificate failure: {0}")]
    Certificate(String),
    #[error("i/o error: {0}")]
    Io(String),
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        match e {
            Error::Refused(_) | Error::NonContraction(_) | Error::SingularCovariance { .. } | Error::SingularFit(_) => {
                CliError::Certificate(e.to_string())
            }
            _ => CliError::Validation(e.to_string()),
        }
    }
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Validation(_) => 2,
            CliError::Certificate(_) => 3,
            CliError::Io(_) => 1,
        }
    }
}

/// Result of a completed run.
#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub pass: bool,
    pub files: Vec<String>,
    pub config_sha256: String,
}

impl Outcome {
    pub fn exit_code(&self) -> i32 {
        if self.pass {
            0
        } else {
            3
        }
    }
}

/// Runs the config at `config` and writes the artifacts into `out`.
pub fn run_file(config: &Path, out: &Path, catalog: &Catalog) -> Result<Outcome, CliError> {
    let text = fs::read_to_string(config).map_err(|e| CliError::Io(format!("{}: {e}", config.display())))?;
    run_text(&text, out, catalog)
}

pub fn run_text(text: &str, out: &Path, catalog: &Catalog) -> Result<Outcome, CliError> {
    let cfg = RunConfig::parse(text)?;
    let resolved = cfg.resolved_toml();
    let hash = output::sha256_hex(&resolved);
    let report = experiments::run(&cfg, catalog)?;
    fs::create_dir_all(out).map_err(|e| CliError::Io(format!("{}: {e}", out.display())))?;
    let mut files = Vec::new();
    for t in &report.tables {
        t.write(out)?;
        files.push(t.file.clone());
    }
    let mut summary = report.summary;
    summary.insert("experiment".into(), json!(cfg.experiment.name()));
    summary.insert("config_sha256".into(), json!(hash));
    summary.insert("status".into(), json!(if report.pass { "PASS" } else { "FAIL" }));
    summary.insert("files".into(), json!(files));
    let body = serde_json::to_string_pretty(&Value::Object(summary)).expect("summary serializes");
    output::write_text(&out.join("summary.json"), &(body + "\n"))?;
    output::write_text(&out.join("resolved_config.toml"), &resolved)?;
    Ok(Outcome {
        pass: report.pass,
        files,
        config_sha256: hash,
    })
}
