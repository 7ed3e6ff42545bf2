//! `canontrace <task> --config <path> [--out <path>] [--cache <dir>]`.
//!
//! Exit status: 0 when the task's check passes, 2 when it fails, 1 on any error.

mod cache;
mod config;
mod tasks;

pub use cache::FileEigenCache;
pub use config::{CutoffConfig, DomainKind, GeometryConfig, JobConfig, Numerics, OperandConfig, Task};
pub use tasks::{Cell, Table, Trust};

use crate::spectral_models::EigenStore;
use crate::{Error, Result};
use clap::Parser;
use serde::Serialize;
use std::io::Write;
use std::path::{Path, PathBuf};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Parser)]
#[command(name = "canontrace", version, about = "Canonical traces, residues and conformal anomaly checks")]
pub struct Args {
    pub task: Task,
    #[arg(long)]
    pub config: PathBuf,
    /// Report path; the CSV table, if any, goes next to it. Defaults to stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Eigendata cache directory.
    #[arg(long)]
    pub cache: Option<PathBuf>,
}

#[derive(Serialize)]
struct Report<'a> {
    schema_version: u32,
    task: Task,
    pass: bool,
    config: &'a JobConfig,
    #[serde(skip_serializing_if = "Option::is_none")]
    trust: Option<Trust>,
    result: serde_json::Value,
}

pub struct JobOutput {
    pub pass: bool,
    /// Pretty JSON report, newline-terminated.
    pub report: String,
    /// CSV table, when the task tabulates a grid.
    pub csv: Option<String>,
}

impl JobOutput {
    pub fn exit_code(&self) -> i32 {
        if self.pass {
            0
        } else {
            2
        }
    }
}

pub fn render_csv(table: &Table) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(&table.header)?;
    for row in &table.rows {
        w.serialize(row)?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Io(e.into_error()))?;
    Ok(String::from_utf8(bytes).expect("csv output is UTF-8"))
}

/// Runs one job and renders its report; nothing is written to disk.
pub fn run_job(task: Task, config: &JobConfig, store: Option<&dyn EigenStore>) -> Result<JobOutput> {
    if let Some(t) = config.task {
        if t != task {
            return Err(Error::Config(format!("config is for task `{}`, not `{}`", t.name(), task.name())));
        }
    }
    let out = tasks::run(task, config, store)?;
    let report = Report { schema_version: SCHEMA_VERSION, task, pass: out.pass, config, trust: out.trust, result: out.result };
    let mut text = serde_json::to_string_pretty(&report)?;
    text.push('\n');
    let csv = out.table.as_ref().map(render_csv).transpose()?;
    Ok(JobOutput { pass: out.pass, report: text, csv })
}

fn write_outputs(out: &JobOutput, path: Option<&Path>) -> Result<()> {
    match path {
        Some(p) => {
            std::fs::write(p, &out.report)?;
            if let Some(csv) = &out.csv {
                std::fs::write(p.with_extension("csv"), csv)?;
            }
        }
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout.write_all(out.report.as_bytes())?;
            if out.csv.is_some() {
                log::info!("CSV table not written: give --out to place it");
            }
        }
    }
    Ok(())
}

pub fn execute(args: &Args) -> Result<i32> {
    let config = JobConfig::load(&args.config)?;
    let out_path = args.out.clone().or_else(|| config.output.clone());
    let cache_dir = args.cache.clone().or_else(|| config.cache_dir.clone());
    let cache = cache_dir.map(FileEigenCache::new).transpose()?;
    let store = cache.as_ref().map(|c| c as &dyn EigenStore);
    let out = run_job(args.task, &config, store)?;
    write_outputs(&out, out_path.as_deref())?;
    log::info!("{}: {}", args.task.name(), if out.pass { "pass" } else { "FAIL" });
    Ok(out.exit_code())
}

pub fn main_entry() -> i32 {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).format_timestamp(None).init();
    let args = match Args::try_parse() {
        Ok(a) => a,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match execute(&args) {
        Ok(code) => code,
        Err(e) => {
            log::error!("{e}");
            1
        }
    }
}
