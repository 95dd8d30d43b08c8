//! Machine-readable run reports.
//!
//! Both formats carry identical row fields. JSON-lines: a config line, one
//! row object per line, then an aggregates line. CSV: `# config: <json>`,
//! the usual header and rows, then `# aggregates: <json>`.

use std::io::{BufRead, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use selfsort_core::SortStats;

use crate::config::{OutputFormat, RunConfig};
use crate::error::{CliError, Result};

pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub instance: u64,
    pub comparisons_total: u64,
    pub comparisons_lookup: u64,
    pub comparisons_merge: u64,
    pub comparisons_verify: u64,
    pub comparisons_fallback: u64,
    pub lookup_fallbacks: u64,
    pub correctness_fallback: bool,
    pub max_occupancy: u64,
    pub mean_occupancy: f64,
    pub occupancy_log_term: f64,
    pub baseline_comparisons: Option<u64>,
    pub wall_ns: u64,
}

impl ReportRow {
    pub fn from_stats(
        instance: u64,
        stats: &SortStats,
        baseline_comparisons: Option<u64>,
        wall_ns: u64,
    ) -> Self {
        Self {
            instance,
            comparisons_total: stats.total(),
            comparisons_lookup: stats.lookup,
            comparisons_merge: stats.merge,
            comparisons_verify: stats.verify,
            comparisons_fallback: stats.fallback_sort,
            lookup_fallbacks: stats.lookup_fallbacks,
            correctness_fallback: stats.correctness_fallback,
            max_occupancy: stats.max_occupancy,
            mean_occupancy: stats.mean_occupancy(),
            occupancy_log_term: stats.occupancy_log_term,
            baseline_comparisons,
            wall_ns,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Aggregates {
    pub instances: u64,
    pub mean_comparisons: f64,
    pub mean_baseline_comparisons: Option<f64>,
    /// mean self comparisons / mean baseline comparisons.
    pub comparison_ratio: Option<f64>,
    /// Mean over instances of the per-instance mean occupancy of non-empty
    /// intervals (|Z_r| for the linear sorter, |N_r| for the mixture sorter).
    pub mean_occupancy: f64,
    pub max_occupancy: u64,
    pub mean_occupancy_log_term: f64,
    pub lookup_fallbacks: u64,
    pub correctness_fallbacks: u64,
    /// Plug-in permutation entropy estimate, only for n <= 8.
    pub perm_entropy_bits: Option<f64>,
    pub wall_ms: f64,
}

impl Aggregates {
    pub fn from_rows(rows: &[ReportRow], perm_entropy_bits: Option<f64>) -> Self {
        let n = rows.len().max(1) as f64;
        let mean_comparisons = rows.iter().map(|r| r.comparisons_total as f64).sum::<f64>() / n;
        let baseline: Vec<u64> = rows.iter().filter_map(|r| r.baseline_comparisons).collect();
        let mean_baseline = if baseline.is_empty() {
            None
        } else {
            Some(baseline.iter().sum::<u64>() as f64 / baseline.len() as f64)
        };
        Self {
            instances: rows.len() as u64,
            mean_comparisons,
            mean_baseline_comparisons: mean_baseline,
            comparison_ratio: mean_baseline.map(|b| mean_comparisons / b),
            mean_occupancy: rows.iter().map(|r| r.mean_occupancy).sum::<f64>() / n,
            max_occupancy: rows.iter().map(|r| r.max_occupancy).max().unwrap_or(0),
            mean_occupancy_log_term: rows.iter().map(|r| r.occupancy_log_term).sum::<f64>() / n,
            lookup_fallbacks: rows.iter().map(|r| r.lookup_fallbacks).sum(),
            correctness_fallbacks: rows.iter().filter(|r| r.correctness_fallback).count() as u64,
            perm_entropy_bits,
            wall_ms: rows.iter().map(|r| r.wall_ns as f64).sum::<f64>() / 1e6,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchReport {
    pub format_version: u32,
    pub config: RunConfig,
    pub rows: Vec<ReportRow>,
    pub aggregates: Aggregates,
}

impl BenchReport {
    pub fn new(config: RunConfig, rows: Vec<ReportRow>, perm_entropy_bits: Option<f64>) -> Self {
        let aggregates = Aggregates::from_rows(&rows, perm_entropy_bits);
        Self {
            format_version: FORMAT_VERSION,
            config,
            rows,
            aggregates,
        }
    }

    pub fn save(&self, path: &Path, format: OutputFormat) -> Result<()> {
        let file = std::fs::File::create(path).map_err(|source| CliError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        let mut out = std::io::BufWriter::new(file);
        match format {
            OutputFormat::JsonLines => self.write_json_lines(&mut out),
            OutputFormat::Csv => self.write_csv(&mut out),
            _ => return Err(CliError::config("report format must be json-lines or csv")),
        }
        .map_err(|source| CliError::Io {
            path: path.to_path_buf(),
            source,
        })
    }

    fn write_json_lines<W: Write>(&self, out: &mut W) -> std::io::Result<()> {
        writeln!(
            out,
            "{}",
            serde_json::json!({ "format_version": self.format_version, "config": self.config })
        )?;
        for row in &self.rows {
            writeln!(out, "{}", serde_json::to_string(row).unwrap())?;
        }
        writeln!(
            out,
            "{}",
            serde_json::json!({ "aggregates": self.aggregates })
        )
    }

    fn write_csv<W: Write>(&self, out: &mut W) -> std::io::Result<()> {
        writeln!(
            out,
            "# config: {}",
            serde_json::json!({ "format_version": self.format_version, "config": self.config })
        )?;
        let mut writer = csv::Writer::from_writer(vec![]);
        for row in &self.rows {
            writer.serialize(row).map_err(std::io::Error::other)?;
        }
        out.write_all(&writer.into_inner().map_err(std::io::Error::other)?)?;
        writeln!(
            out,
            "# aggregates: {}",
            serde_json::json!({ "aggregates": self.aggregates })
        )
    }

    pub fn load(path: &Path) -> Result<Self> {
        let file = std::fs::File::open(path).map_err(|source| CliError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        let reader = std::io::BufReader::new(file);
        let mut config: Option<(u32, RunConfig)> = None;
        let mut aggregates: Option<Aggregates> = None;
        let mut rows: Vec<ReportRow> = Vec::new();
        let mut csv_lines: Vec<String> = Vec::new();
        let bad = |reason: String| CliError::Parse {
            path: path.to_path_buf(),
            reason,
        };
        for line in reader.lines() {
            let line = line.map_err(|source| CliError::Io {
                path: path.to_path_buf(),
                source,
            })?;
            if line.trim().is_empty() {
                continue;
            }
            let payload = line
                .strip_prefix("# config:")
                .or_else(|| line.strip_prefix("# aggregates:"))
                .unwrap_or(&line);
            if line.starts_with('{') || line.starts_with("# ") {
                let value: serde_json::Value =
                    serde_json::from_str(payload.trim()).map_err(|e| bad(e.to_string()))?;
                if let Some(cfg) = value.get("config") {
                    let version = value
                        .get("format_version")
                        .and_then(|v| v.as_u64())
                        .unwrap_or(0) as u32;
                    let cfg: RunConfig =
                        serde_json::from_value(cfg.clone()).map_err(|e| bad(e.to_string()))?;
                    config = Some((version, cfg));
                } else if let Some(agg) = value.get("aggregates") {
                    aggregates =
                        Some(serde_json::from_value(agg.clone()).map_err(|e| bad(e.to_string()))?);
                } else {
                    rows.push(serde_json::from_value(value).map_err(|e| bad(e.to_string()))?);
                }
            } else {
                csv_lines.push(line);
            }
        }
        if !csv_lines.is_empty() {
            let joined = csv_lines.join("\n");
            let mut reader = csv::Reader::from_reader(joined.as_bytes());
            for record in reader.deserialize::<ReportRow>() {
                rows.push(record.map_err(|e| bad(e.to_string()))?);
            }
        }
        let (format_version, config) =
            config.ok_or_else(|| bad("report carries no config line".into()))?;
        if format_version != FORMAT_VERSION {
            return Err(CliError::Version {
                expected: FORMAT_VERSION,
                got: format_version,
            });
        }
        let aggregates = aggregates.ok_or_else(|| bad("report carries no aggregates".into()))?;
        Ok(Self {
            format_version,
            config,
            rows,
            aggregates,
        })
    }
}
