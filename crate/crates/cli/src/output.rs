//! Rendering of results as one JSON document or CSV rows, and atomic
//! writes.

use std::io::Write;
use std::path::Path;

use anyhow::{Context, Result};
use serde_json::{json, Value};

use crate::config::Resolved;

/// Results of one run: the JSON payload and the CSV table with a frozen
/// column order.
pub struct Table {
    pub columns: Vec<&'static str>,
    pub rows: Vec<Vec<String>>,
    pub json: Value,
}

/// JSON: `{"version", "command", "config", "results"}`. CSV: `#` comment
/// lines with the version, command and resolved config, then the header and
/// one row per result.
pub fn render(run: &Resolved, table: &Table, version: &str) -> Result<String> {
    match run.format {
        crate::config::Format::Json => {
            let doc = json!({
                "version": version,
                "command": run.command,
                "config": run.config,
                "results": table.json,
            });
            Ok(serde_json::to_string_pretty(&doc)? + "\n")
        }
        crate::config::Format::Csv => {
            let mut out = format!("# {version}\n# command={}\n", run.command);
            for (k, v) in &run.config {
                out.push_str(&format!("# {k}={v}\n"));
            }
            let mut w = csv::Writer::from_writer(Vec::new());
            w.write_record(&table.columns)?;
            for r in &table.rows {
                w.write_record(r)?;
            }
            out.push_str(std::str::from_utf8(&w.into_inner()?)?);
            Ok(out)
        }
    }
}

/// Write through a temporary file in the destination directory and rename,
/// so a failed run never leaves a partial file behind.
pub fn write_atomic(path: &Path, contents: &str) -> Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let name = path.file_name().context("output path has no file name")?.to_string_lossy();
    let tmp = dir.join(format!(".{name}.{}.tmp", std::process::id()));
    let result = (|| {
        let mut f = std::fs::File::create(&tmp)?;
        f.write_all(contents.as_bytes())?;
        f.sync_all()?;
        std::fs::rename(&tmp, path)
    })();
    if result.is_err() {
        let _ = std::fs::remove_file(&tmp);
    }
    result.with_context(|| format!("writing {}", path.display()))
}
