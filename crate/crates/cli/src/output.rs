//! File writers shared by the subcommands.

use std::fs;
use std::path::Path;
use std::time::{SystemTime, UNIX_EPOCH};

use serde::Serialize;
use serde_json::Value;

use crate::error::{io_err, CliResult};

/// Sidecar written next to every output file.
#[derive(Debug, Serialize)]
pub struct RunManifest<'a> {
    pub subcommand: &'a str,
    /// Files this manifest describes, relative to its directory.
    pub outputs: Vec<String>,
    /// Every flag after defaults were applied.
    pub params: Value,
    /// Quantities derived before the run (solved σ, tolerances, grids).
    pub resolved: Value,
    pub tool_version: &'static str,
    /// Seconds since the epoch; `SOURCE_DATE_EPOCH` overrides the clock.
    pub timestamp: u64,
}

impl<'a> RunManifest<'a> {
    pub fn new(subcommand: &'a str, params: Value, resolved: Value) -> Self {
        RunManifest {
            subcommand,
            outputs: Vec::new(),
            params,
            resolved,
            tool_version: env!("CARGO_PKG_VERSION"),
            timestamp: timestamp(),
        }
    }
}

fn timestamp() -> u64 {
    std::env::var("SOURCE_DATE_EPOCH")
        .ok()
        .and_then(|s| s.trim().parse().ok())
        .unwrap_or_else(|| {
            SystemTime::now()
                .duration_since(UNIX_EPOCH)
                .map(|d| d.as_secs())
                .unwrap_or(0)
        })
}

/// 17 significant digits; empty for a missing value.
pub fn num(x: Option<f64>) -> String {
    x.map(|v| format!("{v:.16e}")).unwrap_or_default()
}

pub fn ensure_dir(dir: &Path) -> CliResult<()> {
    fs::create_dir_all(dir).map_err(io_err(dir))
}

pub fn write_file(path: &Path, contents: &str) -> CliResult<()> {
    fs::write(path, contents).map_err(io_err(path))
}

pub fn to_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("output types serialize");
    s.push('\n');
    s
}

/// Write `files` (name, contents) into `dir`, then `<stem>.manifest.json`
/// listing them.
pub fn write_with_manifest(
    dir: &Path,
    stem: &str,
    files: &[(String, String)],
    mut manifest: RunManifest,
) -> CliResult<()> {
    for (name, contents) in files {
        write_file(&dir.join(name), contents)?;
        manifest.outputs.push(name.clone());
    }
    write_file(
        &dir.join(format!("{stem}.manifest.json")),
        &to_json(&manifest),
    )
}

/// CSV with 17-significant-digit numbers and empty cells for gaps.
pub fn csv_table<R>(header: &str, rows: impl IntoIterator<Item = R>) -> String
where
    R: AsRef<[Option<f64>]>,
{
    let mut out = format!("{header}\n");
    for row in rows {
        let cells: Vec<String> = row.as_ref().iter().map(|x| num(*x)).collect();
        out.push_str(&cells.join(","));
        out.push('\n');
    }
    out
}
