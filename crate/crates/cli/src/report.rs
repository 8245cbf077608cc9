use std::path::Path;
use std::time::{SystemTime, UNIX_EPOCH};

use anyhow::Context;
use serde::Serialize;
use serde_json::Value;

use crate::config::RunConfig;

pub const TOOL: &str = "graph-liouville";
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Status {
    Pass,
    Complete,
    /// Computed, verdict negative.
    Fail,
    /// A precondition of the requested object failed, e.g. σ subcritical.
    Rejected,
    /// Computed only partially, e.g. the enumeration budget ran out.
    Inconclusive,
    Error,
}

impl Status {
    pub fn exit_code(self) -> i32 {
        match self {
            Status::Pass | Status::Complete => 0,
            Status::Fail | Status::Rejected => 2,
            Status::Inconclusive | Status::Error => 1,
        }
    }
}

/// A CSV table to write next to the report.
pub struct Table {
    pub file: &'static str,
    pub header: &'static [&'static str],
    pub rows: Vec<Vec<String>>,
}

pub struct Outcome {
    pub status: Status,
    pub result: Value,
    pub tables: Vec<Table>,
}

impl Outcome {
    pub fn new(status: Status, result: impl Serialize) -> anyhow::Result<Self> {
        Ok(Self {
            status,
            result: serde_json::to_value(result)?,
            tables: Vec::new(),
        })
    }

    pub fn with_table(mut self, table: Table) -> Self {
        self.tables.push(table);
        self
    }
}

/// Formats a float for CSV: shortest round-trip form, empty when absent.
pub fn cell(x: Option<f64>) -> String {
    x.map(|v| format!("{v:?}")).unwrap_or_default()
}

#[derive(Serialize)]
struct Report<'a> {
    tool: &'static str,
    version: &'static str,
    subcommand: &'a str,
    status: Status,
    exit_code: i32,
    #[serde(skip_serializing_if = "Option::is_none")]
    config: Option<&'a RunConfig>,
    #[serde(skip_serializing_if = "Option::is_none")]
    error: Option<String>,
    result: Value,
}

#[derive(Serialize)]
struct Metadata {
    tool: &'static str,
    version: &'static str,
    started_unix: f64,
    wall_seconds: f64,
    workers: usize,
}

fn unix_seconds(t: SystemTime) -> f64 {
    t.duration_since(UNIX_EPOCH).map(|d| d.as_secs_f64()).unwrap_or(0.0)
}

/// Writes `report.json` (deterministic), `metadata.json` (timing), and the
/// tables.
pub fn write(
    out: &Path,
    subcommand: &str,
    config: Option<&RunConfig>,
    outcome: &Outcome,
    error: Option<String>,
    started: SystemTime,
) -> anyhow::Result<()> {
    std::fs::create_dir_all(out).with_context(|| format!("creating {}", out.display()))?;
    let report = Report {
        tool: TOOL,
        version: VERSION,
        subcommand,
        status: outcome.status,
        exit_code: outcome.status.exit_code(),
        config,
        error,
        result: outcome.result.clone(),
    };
    let mut text = serde_json::to_string_pretty(&report)?;
    text.push('\n');
    std::fs::write(out.join("report.json"), text)?;
    for t in &outcome.tables {
        let mut w = csv::Writer::from_path(out.join(t.file))?;
        w.write_record(t.header)?;
        for r in &t.rows {
            w.write_record(r)?;
        }
        w.flush()?;
    }
    let meta = Metadata {
        tool: TOOL,
        version: VERSION,
        started_unix: unix_seconds(started),
        wall_seconds: started.elapsed().map(|d| d.as_secs_f64()).unwrap_or(0.0),
        workers: rayon::current_num_threads(),
    };
    std::fs::write(out.join("metadata.json"), serde_json::to_string_pretty(&meta)? + "\n")?;
    Ok(())
}
