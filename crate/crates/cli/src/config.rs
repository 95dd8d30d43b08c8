use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use selfsort_core::generators::GeneratorSpec;

use crate::error::{CliError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum OutputFormat {
    Text,
    Binary,
    JsonLines,
    Csv,
}

impl std::str::FromStr for OutputFormat {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "text" => Ok(OutputFormat::Text),
            "binary" => Ok(OutputFormat::Binary),
            "json-lines" | "jsonl" => Ok(OutputFormat::JsonLines),
            "csv" => Ok(OutputFormat::Csv),
            other => Err(CliError::config(format!(
                "unknown format `{other}` (expected text, binary, json-lines, or csv)"
            ))),
        }
    }
}

/// One command invocation. Reports embed their full config, including the
/// resolved spec, so a bench run can be replayed bit-for-bit from its report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub command: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub spec: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub model: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub input: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<PathBuf>,
    pub seed: u64,
    pub epsilon: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub m: Option<usize>,
    pub count: u64,
    pub format: OutputFormat,
    pub jobs: usize,
    /// The spec document itself, captured at bench time.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub spec_inline: Option<GeneratorSpec>,
}

impl RunConfig {
    pub fn new(command: &str) -> Self {
        Self {
            command: command.to_string(),
            spec: None,
            model: None,
            input: None,
            output: None,
            seed: 0,
            epsilon: 0.5,
            m: None,
            count: 0,
            format: OutputFormat::JsonLines,
            jobs: 1,
            spec_inline: None,
        }
    }

    pub fn require_epsilon(&self) -> Result<f64> {
        if self.epsilon > 0.0 && self.epsilon < 1.0 {
            Ok(self.epsilon)
        } else {
            Err(CliError::config(format!(
                "epsilon must lie in (0,1), got {}",
                self.epsilon
            )))
        }
    }

    pub fn require_jobs(&self) -> Result<usize> {
        if self.jobs >= 1 {
            Ok(self.jobs)
        } else {
            Err(CliError::config("jobs must be at least 1"))
        }
    }
}
