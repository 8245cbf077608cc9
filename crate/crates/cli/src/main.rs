//! `graph-liouville`: checks, scans, certificates, and probes for
//! `Δu + v·u^σ ≤ 0` on weighted graphs.
//!
//! Every run writes `report.json` (deterministic for a given config and
//! build), `metadata.json` (timestamps), and CSV tables for sweeps. Exit
//! status is 0 on pass or completion, 2 when the computed verdict is
//! negative, and 1 when the computation could not be carried out.

mod commands;
mod config;
mod functions;
mod report;

use std::path::PathBuf;
use std::process::ExitCode;
use std::time::SystemTime;

use clap::Parser;

use config::{Command, RunConfig, Settings, DEFAULT_OUT};
use report::{Outcome, Status};

#[derive(Parser)]
#[command(name = "graph-liouville", version, about = "Liouville-type checks for Δu + v·u^σ ≤ 0 on weighted graphs")]
struct Cli {
    #[arg(value_enum)]
    command: Command,
    /// JSON config; flags override its keys.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(flatten)]
    settings: Settings,
}

fn main() -> ExitCode {
    let started = SystemTime::now();
    let cli = Cli::parse();
    let cmd = cli.command;

    let merged = match &cli.config {
        Some(path) => Settings::load(path).map(|file| file.overlay(cli.settings.clone())),
        None => Ok(cli.settings.clone()),
    };
    let out_dir = merged
        .as_ref()
        .ok()
        .and_then(|s| s.out.clone())
        .or_else(|| cli.settings.out.clone())
        .unwrap_or_else(|| PathBuf::from(DEFAULT_OUT));
    let resolved = merged.and_then(|s| RunConfig::resolve(cmd, s));

    let (cfg, result) = match resolved {
        Ok(cfg) => {
            let result = configure_workers(&cfg).and_then(|()| commands::run(&cfg));
            (Some(cfg), result)
        }
        Err(e) => (None, Err(e)),
    };
    let (outcome, error) = match result {
        Ok(o) => (o, None),
        Err(e) => (
            Outcome {
                status: Status::Error,
                result: serde_json::Value::Null,
                tables: Vec::new(),
            },
            Some(format!("{e:#}")),
        ),
    };
    if let Some(msg) = &error {
        eprintln!("error: {msg}");
    }
    if let Err(e) = report::write(&out_dir, cmd.name(), cfg.as_ref(), &outcome, error, started) {
        eprintln!("error: writing reports to {}: {e:#}", out_dir.display());
        return ExitCode::from(1);
    }
    let code = outcome.status.exit_code();
    eprintln!(
        "{}: {} (report in {})",
        cmd.name(),
        serde_json::to_value(outcome.status).ok().and_then(|v| v.as_str().map(String::from)).unwrap_or_default(),
        out_dir.join("report.json").display()
    );
    ExitCode::from(code as u8)
}

fn configure_workers(cfg: &RunConfig) -> anyhow::Result<()> {
    if let Some(n) = cfg.workers {
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global()?;
    }
    Ok(())
}
